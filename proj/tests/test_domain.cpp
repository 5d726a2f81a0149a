#include <doctest.h>

#include "ionprof/domain.hpp"
#include "ionprof/io.hpp"
#include "test_support.hpp"

using namespace ionprof;
using ionprof::testing::error_of;

TEST_CASE("catalog holds the five simulated ions with their LJ parameters") {
  const auto& cat = ion_catalog();
  REQUIRE(cat.ions.size() == 5);
  struct Row {
    const char* name;
    double sigma, epsilon;
    int charge;
  };
  // Lennard-Jones parameters of the simulated ions.
  const Row rows[] = {{"Na", 2.1600, 0.3526, 1},
                      {"Cl", 4.8305, 0.0128, -1},
                      {"Mg", 2.1200, 0.8750, 2},
                      {"Li", 1.4094, 0.3367, 1},
                      {"K", 2.8384, 0.4297, 1}};
  for (const auto& row : rows) {
    const auto& ion = cat.at(row.name);
    CHECK(ion.sigma == row.sigma);
    CHECK(ion.epsilon == row.epsilon);
    CHECK(ion.charge == row.charge);
  }
  CHECK(cat.wall.sigma == 3.3900);
  CHECK(cat.wall.epsilon == 0.0692);
  CHECK(cat.index_of("Li") == 3);
  CHECK(cat.find("Xe") == nullptr);
  CHECK(error_of([&] { cat.at("Xe"); }) == ErrorCode::kUnknownIon);
}

TEST_CASE("assemble_features orders (r, sigma, epsilon, width, molarity, charge)") {
  const auto& cat = ion_catalog();
  CHECK(assemble_features(ChannelConfig(cat.at("Na"), 2.0, 2.0), 0.5) ==
        FeatureVector{0.5, 2.16, 0.3526, 2.0, 2.0, 1.0});
  CHECK(assemble_features(ChannelConfig(cat.at("Cl"), 1.0, 1.0), 0.0) ==
        FeatureVector{0.0, 4.8305, 0.0128, 1.0, 1.0, -1.0});
  CHECK(assemble_features(ChannelConfig(cat.at("Mg"), 3.0, 3.6), 1.5) ==
        FeatureVector{1.5, 2.12, 0.875, 3.0, 3.6, 2.0});
  CHECK(error_of([&] { assemble_features(ChannelConfig(cat.at("Na"), 2.0, 2.0), -0.01); }) ==
        ErrorCode::kOutOfRange);
  CHECK(kFeatureNames[kR] == "r");
  CHECK(kFeatureNames[kCharge] == "charge");
}

TEST_CASE("species and config constructors enforce invariants") {
  CHECK(error_of([] { IonSpecies("X", 0.0, 0.1, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { IonSpecies("X", 1.0, -0.1, 1); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([] { IonSpecies("X", 1.0, 0.1, 0); }) == ErrorCode::kInvalidArgument);
  const auto& na = ion_catalog().at("Na");
  CHECK(error_of([&] { ChannelConfig(na, 0.0, 1.0); }) == ErrorCode::kInvalidArgument);
  CHECK(error_of([&] { ChannelConfig(na, 1.0, -1.0); }) == ErrorCode::kInvalidArgument);
  // Off-grid values are legal: interpolation is the point.
  const ChannelConfig off(na, 1.234, 0.55);
  CHECK(off.half_width() == doctest::Approx(0.617));
  CHECK(off.label() == "Na_w1.234_c0.550");
}

TEST_CASE("config_key quantizes to 1e-6") {
  const auto& na = ion_catalog().at("Na");
  CHECK(config_key(ChannelConfig(na, 0.1 * 16, 2.2)) == config_key(ChannelConfig(na, 1.6, 2.2)));
  CHECK(config_key(ChannelConfig(na, 1.6, 2.2)) != config_key(ChannelConfig(na, 1.601, 2.2)));
}

TEST_CASE("catalog JSON round-trips and overrides are validated") {
  const auto text = catalog_to_json_text(ion_catalog());
  const auto back = catalog_from_json_text(text);
  REQUIRE(back.ions.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(back.ions[i] == ion_catalog().ions[i]);
  CHECK(catalog_to_json_text(back) == text);

  const auto bare = catalog_from_json_text(R"([{"name":"Rb","sigma":3.0,"epsilon":0.4,"charge":1}])");
  REQUIRE(bare.ions.size() == 1);
  CHECK(bare.at("Rb").sigma == 3.0);

  CHECK(error_of([] {
          catalog_from_json_text(R"([{"name":"A","sigma":1,"epsilon":1,"charge":1},
                                    {"name":"A","sigma":2,"epsilon":1,"charge":1}])");
        }) == ErrorCode::kParse);
  CHECK(error_of([] { catalog_from_json_text(R"([{"name":"A","sigma":1,"epsilon":1,"charge":0}])"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(error_of([] { catalog_from_json_text("{not json"); }) == ErrorCode::kParse);

  ionprof::testing::TempDir dir("catalog");
  const auto path = dir.path() / "cat.json";
  write_file_atomic(path, R"({"ions":[{"name":"Cs","sigma":3.9,"epsilon":0.1,"charge":1}]})");
  CHECK(resolve_catalog(path).at("Cs").sigma == 3.9);
  CHECK(resolve_catalog(std::nullopt).ions.size() == 5);
  CHECK(error_of([&] { load_catalog(dir.path() / "missing.json"); }) == ErrorCode::kIo);
}

#include "ionprof/domain.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ionprof/error.hpp"

namespace ionprof {

using nlohmann::json;

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kUnknownIon: return "unknown_ion";
    case ErrorCode::kMissingInput: return "missing_input";
  }
  return "error";
}

IonSpecies::IonSpecies(std::string name_in, double sigma_in, double epsilon_in, int charge_in)
    : name(std::move(name_in)), sigma(sigma_in), epsilon(epsilon_in), charge(charge_in) {
  require(!name.empty(), ErrorCode::kInvalidArgument, "ion name must be non-empty");
  require(std::isfinite(sigma) && sigma > 0.0, ErrorCode::kInvalidArgument,
          "ion " + name + ": sigma must be > 0");
  require(std::isfinite(epsilon) && epsilon > 0.0, ErrorCode::kInvalidArgument,
          "ion " + name + ": epsilon must be > 0");
  require(charge != 0, ErrorCode::kInvalidArgument, "ion " + name + ": charge must be nonzero");
}

ChannelConfig::ChannelConfig(IonSpecies species_in, double width_in, double molarity_in)
    : species(std::move(species_in)), width(width_in), molarity(molarity_in) {
  require(std::isfinite(width) && width > 0.0, ErrorCode::kInvalidArgument,
          "channel width must be > 0");
  require(std::isfinite(molarity) && molarity > 0.0, ErrorCode::kInvalidArgument,
          "molarity must be > 0");
}

std::string ChannelConfig::label() const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s_w%.3f_c%.3f", species.name.c_str(), width, molarity);
  return buf;
}

ConfigKey config_key(const ChannelConfig& config) {
  return {config.species.name, std::llround(config.width * 1e6),
          std::llround(config.molarity * 1e6)};
}

FeatureVector assemble_features(const ChannelConfig& config, double r) {
  require(std::isfinite(r) && r >= 0.0, ErrorCode::kOutOfRange,
          "distance from channel center must be >= 0");
  return {r,
          config.species.sigma,
          config.species.epsilon,
          config.width,
          config.molarity,
          static_cast<double>(config.species.charge)};
}

const IonSpecies* IonCatalog::find(std::string_view name) const {
  for (const auto& ion : ions)
    if (ion.name == name) return &ion;
  return nullptr;
}

const IonSpecies& IonCatalog::at(std::string_view name) const {
  const auto* ion = find(name);
  if (ion == nullptr) fail(ErrorCode::kUnknownIon, "unknown ion: " + std::string(name));
  return *ion;
}

std::size_t IonCatalog::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < ions.size(); ++i)
    if (ions[i].name == name) return i;
  fail(ErrorCode::kUnknownIon, "unknown ion: " + std::string(name));
}

const IonCatalog& ion_catalog() {
  static const IonCatalog catalog{
      {
          IonSpecies("Na", 2.1600, 0.3526, +1),
          IonSpecies("Cl", 4.8305, 0.0128, -1),
          IonSpecies("Mg", 2.1200, 0.8750, +2),
          IonSpecies("Li", 1.4094, 0.3367, +1),
          IonSpecies("K", 2.8384, 0.4297, +1),
      },
      WallSpecies{},
  };
  return catalog;
}

namespace {

IonSpecies ion_from_json(const json& j) {
  try {
    return IonSpecies(j.at("name").get<std::string>(), j.at("sigma").get<double>(),
                      j.at("epsilon").get<double>(), j.at("charge").get<int>());
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("catalog entry: ") + e.what());
  }
}

}  // namespace

IonCatalog catalog_from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("catalog: ") + e.what());
  }
  IonCatalog catalog;
  const json* ions = &doc;
  if (doc.is_object()) {
    require(doc.contains("ions"), ErrorCode::kParse, "catalog: missing \"ions\"");
    ions = &doc["ions"];
    if (doc.contains("wall")) {
      const auto& w = doc["wall"];
      catalog.wall.name = w.value("name", catalog.wall.name);
      catalog.wall.sigma = w.value("sigma", catalog.wall.sigma);
      catalog.wall.epsilon = w.value("epsilon", catalog.wall.epsilon);
    }
  }
  require(ions->is_array() && !ions->empty(), ErrorCode::kParse,
          "catalog: ions must be a non-empty array");
  std::set<std::string> seen;
  for (const auto& entry : *ions) {
    auto ion = ion_from_json(entry);
    require(seen.insert(ion.name).second, ErrorCode::kParse,
            "catalog: duplicate ion name " + ion.name);
    catalog.ions.push_back(std::move(ion));
  }
  return catalog;
}

std::string catalog_to_json_text(const IonCatalog& catalog) {
  json ions = json::array();
  for (const auto& ion : catalog.ions)
    ions.push_back({{"name", ion.name}, {"sigma", ion.sigma}, {"epsilon", ion.epsilon},
                    {"charge", ion.charge}});
  json doc = {
      {"ions", ions},
      {"wall", {{"name", catalog.wall.name}, {"sigma", catalog.wall.sigma},
                {"epsilon", catalog.wall.epsilon}}},
  };
  return doc.dump(2) + "\n";
}

IonCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open catalog " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return catalog_from_json_text(ss.str());
}

IonCatalog resolve_catalog(const std::optional<std::filesystem::path>& override_path) {
  if (override_path) return load_catalog(*override_path);
  return ion_catalog();
}

}  // namespace ionprof

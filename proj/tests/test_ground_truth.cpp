#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ionprof/ground_truth.hpp"
#include "ionprof/io.hpp"
#include "ionprof/sampler.hpp"
#include "test_support.hpp"

using namespace ionprof;
using ionprof::testing::error_of;
using ionprof::testing::TempDir;

namespace {

ChannelConfig cfg(const char* ion, double w, double c) {
  return ChannelConfig(ion_catalog().at(ion), w, c);
}

// Exact Kolmogorov-Smirnov distance between the sample's step CDF and F.
double ks_distance(std::vector<double> d, const ChannelConfig& config) {
  std::sort(d.begin(), d.end());
  const double n = static_cast<double>(d.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double f = SyntheticOracle::cdf(config, d[i]);
    worst = std::max({worst, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  return worst;
}

std::vector<double> distances(const TrajectorySlab& slab) {
  std::vector<double> d;
  for (double z : slab.z) d.push_back(std::abs(z - slab.center));
  return d;
}

}  // namespace

TEST_CASE("empirical_cdf hand counts") {
  TrajectorySlab slab{cfg("Na", 2.0, 1.0), 0.0, {-0.9, -0.4, 0.1, 0.5}};
  CHECK(empirical_cdf(slab, 0.45) == 0.5);
  CHECK(empirical_cdf(slab, 1.0) == 1.0);
  CHECK(empirical_cdf(slab, 0.0) == 0.0);
  CHECK(empirical_cdf(slab, 0.4) == 0.5);  // |z - o| <= r is inclusive

  TrajectorySlab centered{cfg("Na", 2.0, 1.0), 0.7, {0.7, 0.7, 0.7}};
  for (double r : {0.0, 0.3, 5.0}) CHECK(empirical_cdf(centered, r) == 1.0);

  TrajectorySlab empty{cfg("Na", 2.0, 1.0), 0.0, {}};
  CHECK(error_of([&] { empirical_cdf(empty, 0.1); }) == ErrorCode::kInvalidArgument);
  TrajectorySlab outside{cfg("Na", 2.0, 1.0), 0.0, {1.06}};
  CHECK(error_of([&] { validate_slab(outside); }) == ErrorCode::kOutOfRange);
  TrajectorySlab edge{cfg("Na", 2.0, 1.0), 0.0, {1.04}};
  CHECK_NOTHROW(validate_slab(edge));
}

TEST_CASE("EmpiricalCdf answers exactly like the linear count") {
  const auto slab = synthesize_trajectory(cfg("K", 1.7, 2.3), 50, 40, 3);
  const EmpiricalCdf fast(slab);
  for (int i = 0; i <= 1000; ++i) {
    const double r = 0.9 * i / 1000.0;
    REQUIRE(fast(r) == empirical_cdf(slab, r));
  }
  // Query exactly at sample values, where <= matters.
  for (std::size_t i = 0; i < 50; ++i) {
    const double r = std::abs(slab.z[i] - slab.center);
    REQUIRE(fast(r) == empirical_cdf(slab, r));
  }
}

TEST_CASE("synthetic oracle boundary values and monotonicity on the full grid") {
  for (const auto& c : paper_grid()) {
    const double h = c.half_width();
    REQUIRE(SyntheticOracle::cdf(c, 0.0) == 0.0);
    REQUIRE(SyntheticOracle::cdf(c, h) == 1.0);
    REQUIRE(SyntheticOracle::cdf(c, h + 0.1) == 1.0);
    double prev = 0.0;
    for (int i = 1; i <= 2000; ++i) {
      const double f = SyntheticOracle::cdf(c, h * i / 2000.0);
      REQUIRE(f >= prev);
      REQUIRE(f <= 1.0);
      prev = f;
    }
  }
}

TEST_CASE("synthetic CDF equals the integral of its density") {
  // Composite Simpson on a fine grid as an independent quadrature oracle.
  for (const auto& c : {cfg("Na", 2.0, 2.2), cfg("Mg", 0.8, 3.6), cfg("Cl", 3.0, 0.8),
                        cfg("Li", 1.3, 1.1)}) {
    const double h = c.half_width();
    const int n = 20000;
    const double dx = h / n;
    double acc = 0.0;
    for (int k = 0; k < n; k += 2) {
      const double a = k * dx;
      acc += dx / 3.0 *
             (SyntheticOracle::density(c, a) + 4 * SyntheticOracle::density(c, a + dx) +
              SyntheticOracle::density(c, a + 2 * dx));
      if ((k + 2) % 2000 == 0) CHECK(acc == doctest::Approx(SyntheticOracle::cdf(c, a + 2 * dx)).epsilon(1e-9));
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("synthetic density has a hydrated first layer and a weaker second layer") {
  for (const char* ion : {"Na", "Cl", "Mg", "Li", "K"}) {
    const auto c = cfg(ion, 3.0, 2.0);
    const double h = c.half_width();
    const double first = (c.species.sigma / 10.0) / 2.0 + SyntheticOracle::kHydrationOffset;
    // Global maximum of the density on a 1e-4 nm scan.
    double best_r = 0.0, best = -1.0;
    for (int i = 0; i <= 15000; ++i) {
      const double r = h * i / 15000.0;
      const double d = SyntheticOracle::density(c, r);
      if (d > best) best = d, best_r = r;
    }
    CHECK(std::abs((h - best_r) - first) < 0.01);
    // Local maximum near the second layer, lower than the first.
    const double r2 = h - first - SyntheticOracle::kWaterDiameter;
    double local_r = 0.0, local = -1.0;
    for (int i = -600; i <= 600; ++i) {
      const double r = r2 + i * 1e-4;
      const double d = SyntheticOracle::density(c, r);
      if (d > local) local = d, local_r = r;
    }
    CHECK(std::abs(local_r - r2) < 0.03);
    CHECK(local < best);
    CHECK(local > SyntheticOracle::density(c, r2 + 0.1));
  }
}

TEST_CASE("synthetic CDF is continuous in every config field") {
  const auto& na = ion_catalog().at("Na");
  const ChannelConfig base(na, 2.0, 2.0);
  const double r = 0.8;
  const double f = SyntheticOracle::cdf(base, r);
  CHECK(std::abs(SyntheticOracle::cdf(ChannelConfig(na, 2.0 + 1e-7, 2.0), r) - f) < 1e-4);
  CHECK(std::abs(SyntheticOracle::cdf(ChannelConfig(na, 2.0, 2.0 + 1e-7), r) - f) < 1e-4);
  const IonSpecies bumped("Na", na.sigma + 1e-7, na.epsilon + 1e-7, 1);
  CHECK(std::abs(SyntheticOracle::cdf(ChannelConfig(bumped, 2.0, 2.0), r) - f) < 1e-4);
  // The first-layer weight responds to molarity.
  CHECK(SyntheticOracle::mixture(ChannelConfig(na, 2.0, 3.4)).primary_weight >
        SyntheticOracle::mixture(ChannelConfig(na, 2.0, 0.8)).primary_weight);
}

TEST_CASE("inverse_cdf inverts cdf") {
  const auto c = cfg("Cl", 1.8, 1.4);
  for (double u : {1e-6, 0.1, 0.37, 0.5, 0.9, 0.999999}) {
    const double r = SyntheticOracle::inverse_cdf(c, u);
    CHECK(SyntheticOracle::cdf(c, r) >= u);
    CHECK(SyntheticOracle::cdf(c, std::max(0.0, r - 1e-11)) <= u + 1e-9);
  }
}

TEST_CASE("synthesize_trajectory size, bounds, determinism and DKW bound") {
  const auto c = cfg("Na", 2.0, 2.0);
  const auto slab = synthesize_trajectory(c, 100, 200, 7);
  REQUIRE(slab.z.size() == 20000);
  for (double z : slab.z) REQUIRE(std::abs(z - slab.center) <= 1.0);
  const auto again = synthesize_trajectory(c, 100, 200, 7);
  CHECK(again.z == slab.z);
  CHECK(synthesize_trajectory(c, 100, 200, 8).z != slab.z);
  CHECK(ks_distance(distances(slab), c) <= 1.36 / std::sqrt(20000.0));
}

TEST_CASE("10^5 synthesized coordinates stay within 0.01 of the oracle") {
  for (const auto& c : {cfg("Mg", 0.8, 3.6), cfg("K", 3.0, 0.8), cfg("Cl", 2.4, 2.2)}) {
    const auto slab = synthesize_trajectory(c, 100, 1000, 21);
    CHECK(ks_distance(distances(slab), c) < 0.01);
  }
}

TEST_CASE("ingestion: CSV + sidecar -> cache -> identical queries") {
  TempDir dir("ingest");
  const auto c = cfg("Li", 1.5, 1.2);
  const auto slab = synthesize_trajectory(c, 100, 200, 99);
  std::string csv = "frame,ion_id,z\n";
  for (std::size_t i = 0; i < slab.z.size(); ++i)
    csv += std::to_string(i / 100) + "," + std::to_string(i % 100) + "," + format_double(slab.z[i]) + "\n";
  ionprof::testing::spit(dir.path() / "traj.csv", csv);
  ionprof::testing::spit(dir.path() / "traj.json",
                         R"({"ion_name":"Li","width_nm":1.5,"molarity_M":1.2,"center_nm":0.75})");

  const auto sidecar = load_sidecar(dir.path() / "traj.json");
  const auto loaded = load_trajectory(dir.path() / "traj.csv", sidecar, ion_catalog());
  REQUIRE(loaded.z == slab.z);
  CHECK(loaded.center == 0.75);

  const EmpiricalCdf cdf(loaded);
  const auto cache = dir.path() / cdf_cache_filename(c);
  write_cdf_cache(cache, cdf);
  const auto back = read_cdf_cache(cache);
  CHECK(back.distances() == cdf.distances());
  CHECK(back.config().species == c.species);

  const auto source = load_cdf_cache_dir(dir.path());
  CHECK(source.size() == 1);
  CHECK(source.exact());
  for (int i = 0; i <= 400; ++i) {
    const double r = 0.8 * i / 400.0;
    REQUIRE(source(c, r) == empirical_cdf(slab, r));
  }
  CHECK(error_of([&] { source(cfg("Li", 1.6, 1.2), 0.1); }) == ErrorCode::kMissingInput);

  // A coordinate beyond the wall tolerance is reported with its row number.
  ionprof::testing::spit(dir.path() / "bad.csv", "frame,ion_id,z\n0,0,0.5\n0,1,1.6\n");
  try {
    load_trajectory(dir.path() / "bad.csv", sidecar, ion_catalog());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfRange);
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  ionprof::testing::spit(dir.path() / "malformed.csv", "frame,ion_id,z\n0,0,abc\n");
  CHECK(error_of([&] { load_trajectory(dir.path() / "malformed.csv", sidecar, ion_catalog()); }) ==
        ErrorCode::kParse);
  ionprof::testing::spit(dir.path() / "header.csv", "t,id,z\n0,0,0.5\n");
  CHECK(error_of([&] { load_trajectory(dir.path() / "header.csv", sidecar, ion_catalog()); }) ==
        ErrorCode::kParse);
  ionprof::testing::spit(dir.path() / "trunc.cdfcache", "IPCDFC01\x03");
  CHECK(error_of([&] { read_cdf_cache(dir.path() / "trunc.cdfcache"); }) == ErrorCode::kParse);
}

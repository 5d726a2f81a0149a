#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ionprof/cdf_source.hpp"
#include "ionprof/domain.hpp"

namespace ionprof {

// Ions further than this beyond the wall plane are rejected on ingestion.
inline constexpr double kWallTolerance = 0.05;  // nm

// Pooled ion z-coordinates (all frames) of one system.
struct TrajectorySlab {
  ChannelConfig config;
  double center = 0.0;    // nm
  std::vector<double> z;  // nm
};

// Throws unless the slab is non-empty and every |z - center| stays within
// width/2 + kWallTolerance.
void validate_slab(const TrajectorySlab& slab);

// Fraction of pooled coordinates with |z - center| <= r.
double empirical_cdf(const TrajectorySlab& slab, double r);

// Sorted |z - center| of one slab: O(log N) CDF queries.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;
  explicit EmpiricalCdf(const TrajectorySlab& slab);
  EmpiricalCdf(ChannelConfig config, std::vector<double> sorted_distances);

  double operator()(double r) const;

  const ChannelConfig& config() const { return config_; }
  const std::vector<double>& distances() const { return distances_; }

 private:
  ChannelConfig config_;
  std::vector<double> distances_;
};

// Ground truth from ingested trajectories, one EmpiricalCdf per config.
class EmpiricalSource : public CdfFunction {
 public:
  void add(EmpiricalCdf cdf);
  bool contains(const ChannelConfig& config) const;
  std::size_t size() const { return cdfs_.size(); }

  void evaluate(const ChannelConfig& config, std::span<const double> r,
                std::span<double> out) const override;
  bool exact() const override { return true; }
  std::string_view kind() const override { return "empirical"; }

 private:
  std::map<ConfigKey, EmpiricalCdf> cdfs_;
};

// Deterministic closed-form stand-in for MD ground truth. The ion density
// over r in [0, w/2] is a mixture of
//   - a primary layer at (sigma/10)/2 + 0.17 nm from the wall,
//   - a weaker second layer one water diameter (0.28 nm) further in, faded
//     out smoothly as it approaches the channel center,
//   - a uniform bulk remainder,
// each peak a Gaussian truncated to [0, w/2]. F is exactly 0 at r = 0 and
// exactly 1 for r >= w/2.
class SyntheticOracle : public CdfFunction {
 public:
  static constexpr std::string_view kVersion = "synthetic-edl-v1";
  static constexpr double kHydrationOffset = 0.17;  // nm
  static constexpr double kWaterDiameter = 0.28;    // nm

  struct Mixture {
    double uniform_weight;
    double primary_weight, primary_center, primary_spread;
    double secondary_weight, secondary_center, secondary_spread;
  };

  static Mixture mixture(const ChannelConfig& config);
  static double cdf(const ChannelConfig& config, double r);
  static double density(const ChannelConfig& config, double r);

  // Smallest r with cdf(r) >= u, by bisection to 1e-13 nm.
  static double inverse_cdf(const ChannelConfig& config, double u);

  void evaluate(const ChannelConfig& config, std::span<const double> r,
                std::span<double> out) const override;
  bool exact() const override { return true; }
  std::string_view kind() const override { return "synthetic"; }
};

// n_ions * n_frames coordinates drawn by inverse-transform sampling from the
// synthetic oracle, each placed on a random side of the center. The center
// sits at width/2 (walls at z = 0 and z = width).
TrajectorySlab synthesize_trajectory(const ChannelConfig& config, std::size_t n_ions,
                                     std::size_t n_frames, std::uint64_t seed);

// --- ingestion -----------------------------------------------------------

struct TrajectorySidecar {
  std::string ion_name;
  double width_nm = 0.0;
  double molarity_M = 0.0;
  double center_nm = 0.0;
};

TrajectorySidecar load_sidecar(const std::filesystem::path& path);

// CSV with header `frame,ion_id,z`. Rows violating the wall tolerance are
// reported with their 1-based line number.
TrajectorySlab load_trajectory(const std::filesystem::path& csv_path,
                               const TrajectorySidecar& sidecar, const IonCatalog& catalog);

// Binary cache of one config's sorted distances (host byte order):
//   "IPCDFC01" | u32 name_len | name | f64 width | f64 molarity | f64 sigma |
//   f64 epsilon | i32 charge | u64 count | f64[count] sorted |z - o|
void write_cdf_cache(const std::filesystem::path& path, const EmpiricalCdf& cdf);
EmpiricalCdf read_cdf_cache(const std::filesystem::path& path);
std::string cdf_cache_filename(const ChannelConfig& config);

// Every *.cdfcache file in a directory.
EmpiricalSource load_cdf_cache_dir(const std::filesystem::path& dir);

}  // namespace ionprof

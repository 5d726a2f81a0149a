#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ionprof/cdf_source.hpp"
#include "ionprof/domain.hpp"

namespace ionprof {

// Samples reach this far past the wall so models learn F = 1 outside.
inline constexpr double kOutsideMargin = 0.1;  // nm
// The second half of each config's samples concentrates on this band next
// to the wall.
inline constexpr double kWallBand = 0.5;  // nm

struct CdfSample {
  FeatureVector features{};
  double target = 0.0;
};

enum class Partition { kTrain, kTest };

std::string_view partition_name(Partition p);

struct DatasetProvenance {
  std::uint64_t master_seed = 0;
  std::size_t per_config = 0;
  std::size_t train_configs = 0;
  std::size_t test_configs = 0;
  std::string grid_description;
  std::string source_kind;
};

struct Dataset {
  std::vector<CdfSample> train;
  std::vector<CdfSample> test;
  DatasetProvenance provenance;
};

// Held-out values for the interpolation set.
inline constexpr double kTestWidths[] = {1.6, 2.4, 2.8};
inline constexpr double kTestMolarities[] = {1.4, 2.2, 3.0};
inline constexpr double kSplitTolerance = 1e-9;

Partition split_rule(const ChannelConfig& config);

// n/2 draws with r uniform on [0, w/2 + 0.1] followed by n/2 draws with r
// uniform on [max(0, w/2 - 0.5), w/2]; targets from `source`.
std::vector<CdfSample> sample_config(const ChannelConfig& config, const CdfFunction& source,
                                     std::size_t n, std::uint64_t seed);

// Seed of one config's stream; depends only on the master seed and the
// config's own values.
std::uint64_t config_seed(std::uint64_t master_seed, const ChannelConfig& config);

Dataset build_dataset(const std::vector<ChannelConfig>& grid, const CdfFunction& source,
                      std::size_t per_config, std::uint64_t master_seed, unsigned threads = 1);

// Grid helpers.
std::vector<double> paper_widths();      // 0.8, 0.9, ..., 3.0 (23 values)
std::vector<double> paper_molarities();  // 0.8, 1.0, ..., 3.6 (15 values)
std::vector<ChannelConfig> make_grid(const IonCatalog& catalog,
                                     const std::vector<std::string>& ions,
                                     const std::vector<double>& widths,
                                     const std::vector<double>& molarities);
std::vector<ChannelConfig> paper_grid(const IonCatalog& catalog = ion_catalog());

// CSV with header r,sigma,epsilon,width,molarity,charge,cdf. Reading accepts
// a gzip-compressed file (".gz" suffix).
inline constexpr std::string_view kDatasetHeader = "r,sigma,epsilon,width,molarity,charge,cdf";
std::string samples_to_csv(const std::vector<CdfSample>& samples);
std::vector<CdfSample> read_samples_csv(const std::filesystem::path& path);

}  // namespace ionprof

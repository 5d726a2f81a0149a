#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ionprof/domain.hpp"
#include "ionprof/gbdt.hpp"
#include "ionprof/mlp.hpp"

namespace ionprof {

struct GridSpec {
  std::vector<std::string> ions;
  std::vector<double> widths;
  std::vector<double> molarities;
};

struct SamplingSpec {
  std::size_t per_config = 2000;
  std::uint64_t master_seed = 0;
};

struct GroundTruthSpec {
  std::string kind = "synthetic";  // or "empirical"
  std::filesystem::path cache_dir = "cache";
};

struct MlpSpec {
  std::vector<int> hidden = kPaperHiddenDims;
  MlpTrainOptions train;
};

struct EvaluationSpec {
  std::vector<double> bin_sizes = {0.05};
  double bench_bin_size = 0.05;
  std::size_t bench_runs = 6;
  // Grid for `bench`; the full 1,725-config grid unless overridden.
  std::optional<GridSpec> bench_grid;
};

struct PathsSpec {
  std::filesystem::path dataset_dir = "dataset";
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "reports";
};

struct RunConfig {
  std::string preset = "paper";
  GridSpec grid;
  SamplingSpec sampling;
  GroundTruthSpec ground_truth;
  std::optional<std::filesystem::path> catalog_path;
  MlpSpec mlp;
  GbdtTrainOptions gbdt;
  EvaluationSpec evaluation;
  PathsSpec paths;
};

// Full grid, 2000 samples/config, full-size MLP and GBDT.
RunConfig paper_preset();
// 5 ions x 12 widths x 8 molarities x 500 samples, MLP (6,64,32,1) for 50
// epochs, 20 GBDT rounds.
RunConfig desk_preset();
RunConfig preset_by_name(std::string_view name);

// Fields present in the JSON override those of `base`.
RunConfig apply_config_json(RunConfig base, std::string_view json_text);

// Throws unless every ion exists in the catalog, bin sizes are positive and
// per_config is even.
void validate(const RunConfig& config, const IonCatalog& catalog);

std::string run_config_to_json(const RunConfig& config);

std::vector<ChannelConfig> grid_configs(const GridSpec& grid, const IonCatalog& catalog);

}  // namespace ionprof

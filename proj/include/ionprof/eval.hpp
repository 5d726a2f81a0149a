#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ionprof/cdf_source.hpp"
#include "ionprof/profile.hpp"
#include "ionprof/sampler.hpp"

namespace ionprof {

// Mean over bins of |C_pred - C_ref|, M. Bin edges must match.
double profile_mae(const ConcentrationProfile& predicted, const ConcentrationProfile& reference);

// |peak midpoint(predicted) - peak midpoint(reference)|, nm.
double peak_deviation(const ConcentrationProfile& predicted,
                      const ConcentrationProfile& reference);

struct ConfigMetrics {
  ChannelConfig config;
  Partition partition = Partition::kTrain;
  double mae = 0.0;
  double peak_deviation = 0.0;
};

// One entry per grid config, in grid order.
std::vector<ConfigMetrics> mae_grid(const CdfFunction& model, const CdfFunction& source,
                                    const std::vector<ChannelConfig>& grid, double bin_size,
                                    unsigned threads = 1);

struct PartitionAggregate {
  std::size_t count = 0;
  double mae = 0.0;
  double peak_deviation = 0.0;
};

struct TimingResult {
  std::vector<double> runs;  // seconds
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1); 0 for a single run
  std::size_t profiles_per_run = 0;
};

// Wall-clock time to predict every profile of `grid`, repeated `runs` times
// after one untimed warm-up. Runs serially.
TimingResult bench_inference(const CdfFunction& model, const std::vector<ChannelConfig>& grid,
                             double bin_size, std::size_t runs);

// "0.80(0.10)"
std::string format_timing(const TimingResult& timing);

struct EvalReport {
  std::string model_kind;
  double bin_size = 0.0;
  std::vector<ConfigMetrics> per_config;
  PartitionAggregate train;
  PartitionAggregate test;  // the interpolation set
  std::optional<TimingResult> timing;
};

EvalReport make_report(std::string model_kind, double bin_size,
                       std::vector<ConfigMetrics> per_config);

// {model, bin_size, per_config:[{ion,width,molarity,partition,mae,peak_dev}],
//  aggregates:{train,test}, timing:{runs,mean,std}}
std::string report_to_json(const EvalReport& report, std::string_view input_hash = {});

// `ion,width,molarity,partition,mae`
std::string heatmap_to_csv(const std::vector<ConfigMetrics>& metrics);

}  // namespace ionprof

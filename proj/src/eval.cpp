#include "ionprof/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "ionprof/error.hpp"
#include "ionprof/io.hpp"

namespace ionprof {

namespace {

void check_same_binning(const ConcentrationProfile& a, const ConcentrationProfile& b) {
  require(a.bin_count() > 0 && a.bin_edges.size() == b.bin_edges.size(),
          ErrorCode::kInvalidArgument, "profiles have different binning");
  for (std::size_t i = 0; i < a.bin_edges.size(); ++i)
    require(std::abs(a.bin_edges[i] - b.bin_edges[i]) <= 1e-12, ErrorCode::kInvalidArgument,
            "profiles have different binning");
}

}  // namespace

double profile_mae(const ConcentrationProfile& predicted, const ConcentrationProfile& reference) {
  check_same_binning(predicted, reference);
  double sum = 0.0;
  for (std::size_t b = 0; b < predicted.bin_count(); ++b)
    sum += std::abs(predicted.concentrations[b] - reference.concentrations[b]);
  return sum / static_cast<double>(predicted.bin_count());
}

double peak_deviation(const ConcentrationProfile& predicted,
                      const ConcentrationProfile& reference) {
  check_same_binning(predicted, reference);
  const std::size_t a = peak_bin(predicted);
  const std::size_t b = peak_bin(reference);
  if (a == b) return 0.0;
  // Full-width bins have midpoints (i + 1/2) b, so their distance is |a - b| b;
  // computing it that way avoids rounding noise in the edge arithmetic.
  const std::size_t last = predicted.bin_count() - 1;
  const bool last_is_partial =
      std::abs((predicted.bin_edges[last + 1] - predicted.bin_edges[last]) - predicted.bin_size) >
      1e-12;
  if (!last_is_partial || (a != last && b != last))
    return static_cast<double>(a > b ? a - b : b - a) * predicted.bin_size;
  return std::abs(predicted.bin_mid(a) - reference.bin_mid(b));
}

std::vector<ConfigMetrics> mae_grid(const CdfFunction& model, const CdfFunction& source,
                                    const std::vector<ChannelConfig>& grid, double bin_size,
                                    unsigned threads) {
  require(!grid.empty(), ErrorCode::kInvalidArgument, "grid must be non-empty");
  std::vector<ConfigMetrics> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const auto pred = predict_profile(model, grid[i], bin_size);
    const auto ref = predict_profile(source, grid[i], bin_size);
    out[i] = {grid[i], split_rule(grid[i]), profile_mae(pred, ref), peak_deviation(pred, ref)};
  });
  return out;
}

TimingResult bench_inference(const CdfFunction& model, const std::vector<ChannelConfig>& grid,
                             double bin_size, std::size_t runs) {
  require(runs >= 1, ErrorCode::kInvalidArgument, "bench needs at least one run");
  require(!grid.empty(), ErrorCode::kInvalidArgument, "grid must be non-empty");
  volatile double sink = 0.0;
  auto one_pass = [&] {
    double acc = 0.0;
    for (const auto& c : grid) acc += predict_profile(model, c, bin_size).concentrations.back();
    sink = sink + acc;
  };
  one_pass();  // warm-up

  TimingResult t;
  t.profiles_per_run = grid.size();
  for (std::size_t k = 0; k < runs; ++k) {
    const auto start = std::chrono::steady_clock::now();
    one_pass();
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    t.runs.push_back(elapsed.count());
  }
  double sum = 0.0;
  for (double s : t.runs) sum += s;
  t.mean = sum / static_cast<double>(runs);
  if (runs > 1) {
    double ss = 0.0;
    for (double s : t.runs) ss += (s - t.mean) * (s - t.mean);
    t.stddev = std::sqrt(ss / static_cast<double>(runs - 1));
  }
  return t;
}

std::string format_timing(const TimingResult& timing) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f(%.2f)", timing.mean, timing.stddev);
  return buf;
}

EvalReport make_report(std::string model_kind, double bin_size,
                       std::vector<ConfigMetrics> per_config) {
  EvalReport r;
  r.model_kind = std::move(model_kind);
  r.bin_size = bin_size;
  r.per_config = std::move(per_config);
  for (const auto& m : r.per_config) {
    auto& agg = m.partition == Partition::kTest ? r.test : r.train;
    ++agg.count;
    agg.mae += m.mae;
    agg.peak_deviation += m.peak_deviation;
  }
  for (auto* agg : {&r.train, &r.test}) {
    if (agg->count > 0) {
      agg->mae /= static_cast<double>(agg->count);
      agg->peak_deviation /= static_cast<double>(agg->count);
    }
  }
  return r;
}

std::string report_to_json(const EvalReport& report, std::string_view input_hash) {
  using nlohmann::json;
  json per = json::array();
  for (const auto& m : report.per_config)
    per.push_back({{"ion", m.config.species.name},
                   {"width", m.config.width},
                   {"molarity", m.config.molarity},
                   {"partition", partition_name(m.partition)},
                   {"mae", m.mae},
                   {"peak_dev", m.peak_deviation}});
  auto agg = [](const PartitionAggregate& a) {
    return json{{"count", a.count}, {"mae", a.mae}, {"peak_dev", a.peak_deviation}};
  };
  json doc = {
      {"schema_version", 1},
      {"model", report.model_kind},
      {"bin_size", report.bin_size},
      {"per_config", std::move(per)},
      {"aggregates", {{"train", agg(report.train)}, {"test", agg(report.test)}}},
      {"timing", nullptr},
  };
  if (report.timing) {
    doc["timing"] = {{"runs", report.timing->runs},
                     {"mean", report.timing->mean},
                     {"std", report.timing->stddev},
                     {"profiles_per_run", report.timing->profiles_per_run}};
  }
  if (!input_hash.empty()) doc["provenance"] = {{"input_hash", std::string(input_hash)}};
  return doc.dump(2) + "\n";
}

std::string heatmap_to_csv(const std::vector<ConfigMetrics>& metrics) {
  std::string out = "ion,width,molarity,partition,mae\n";
  for (const auto& m : metrics) {
    out += m.config.species.name;
    out += ',';
    out += format_double(m.config.width);
    out += ',';
    out += format_double(m.config.molarity);
    out += ',';
    out += partition_name(m.partition);
    out += ',';
    out += format_double(m.mae);
    out += '\n';
  }
  return out;
}

}  // namespace ionprof

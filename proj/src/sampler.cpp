#include "ionprof/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ionprof/error.hpp"
#include "ionprof/io.hpp"
#include "ionprof/rng.hpp"

namespace ionprof {

std::string_view partition_name(Partition p) { return p == Partition::kTest ? "test" : "train"; }

namespace {

bool member(double value, std::span<const double> set) {
  return std::any_of(set.begin(), set.end(),
                     [&](double v) { return std::abs(v - value) <= kSplitTolerance; });
}

}  // namespace

Partition split_rule(const ChannelConfig& config) {
  if (member(config.width, kTestWidths) || member(config.molarity, kTestMolarities))
    return Partition::kTest;
  return Partition::kTrain;
}

std::vector<CdfSample> sample_config(const ChannelConfig& config, const CdfFunction& source,
                                     std::size_t n, std::uint64_t seed) {
  require(n >= 2 && n % 2 == 0, ErrorCode::kInvalidArgument,
          "samples per config must be even and >= 2, got " + std::to_string(n));
  const double h = config.half_width();
  const std::size_t half = n / 2;
  Rng rng(seed);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < half; ++i) r[i] = rng.uniform(0.0, h + kOutsideMargin);
  const double band_lo = std::max(0.0, h - kWallBand);
  for (std::size_t i = half; i < n; ++i) r[i] = rng.uniform(band_lo, h);

  std::vector<double> targets(n);
  source.evaluate(config, r, targets);

  std::vector<CdfSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(targets[i] >= 0.0 && targets[i] <= 1.0, ErrorCode::kOutOfRange,
            "CDF source returned a value outside [0, 1] for " + config.label());
    out[i].features = assemble_features(config, r[i]);
    out[i].target = targets[i];
  }
  return out;
}

std::uint64_t config_seed(std::uint64_t master_seed, const ChannelConfig& config) {
  const auto key = config_key(config);
  std::uint64_t s = mix_seed(master_seed, key.ion);
  s = mix_seed(s, static_cast<std::uint64_t>(key.width_micro));
  return mix_seed(s, static_cast<std::uint64_t>(key.molarity_micro));
}

Dataset build_dataset(const std::vector<ChannelConfig>& grid, const CdfFunction& source,
                      std::size_t per_config, std::uint64_t master_seed, unsigned threads) {
  require(!grid.empty(), ErrorCode::kInvalidArgument, "grid must be non-empty");
  std::set<ConfigKey> seen;
  for (const auto& c : grid)
    require(seen.insert(config_key(c)).second, ErrorCode::kInvalidArgument,
            "duplicate config in grid: " + c.label());
  // Validate n before spawning work.
  require(per_config >= 2 && per_config % 2 == 0, ErrorCode::kInvalidArgument,
          "samples per config must be even and >= 2");

  std::vector<std::vector<CdfSample>> per(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    per[i] = sample_config(grid[i], source, per_config, config_seed(master_seed, grid[i]));
  });

  Dataset ds;
  std::size_t n_test = 0;
  for (const auto& c : grid)
    if (split_rule(c) == Partition::kTest) ++n_test;
  ds.train.reserve((grid.size() - n_test) * per_config);
  ds.test.reserve(n_test * per_config);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto& dst = split_rule(grid[i]) == Partition::kTest ? ds.test : ds.train;
    dst.insert(dst.end(), per[i].begin(), per[i].end());
    std::vector<CdfSample>().swap(per[i]);
  }

  std::set<std::string> ions;
  std::set<long long> widths, molarities;
  for (const auto& c : grid) {
    const auto key = config_key(c);
    ions.insert(key.ion);
    widths.insert(key.width_micro);
    molarities.insert(key.molarity_micro);
  }
  std::ostringstream desc;
  desc << grid.size() << " configs (" << ions.size() << " ions, " << widths.size()
       << " widths, " << molarities.size() << " molarities)";

  ds.provenance = {master_seed,      per_config, grid.size() - n_test, n_test, desc.str(),
                   std::string(source.kind())};
  return ds;
}

std::vector<double> paper_widths() {
  std::vector<double> w;
  for (int i = 8; i <= 30; ++i) w.push_back(i / 10.0);
  return w;
}

std::vector<double> paper_molarities() {
  std::vector<double> c;
  for (int i = 8; i <= 36; i += 2) c.push_back(i / 10.0);
  return c;
}

std::vector<ChannelConfig> make_grid(const IonCatalog& catalog,
                                     const std::vector<std::string>& ions,
                                     const std::vector<double>& widths,
                                     const std::vector<double>& molarities) {
  std::vector<ChannelConfig> grid;
  grid.reserve(ions.size() * widths.size() * molarities.size());
  for (const auto& ion : ions)
    for (double w : widths)
      for (double c : molarities) grid.emplace_back(catalog.at(ion), w, c);
  return grid;
}

std::vector<ChannelConfig> paper_grid(const IonCatalog& catalog) {
  std::vector<std::string> names;
  for (const auto& ion : catalog.ions) names.push_back(ion.name);
  return make_grid(catalog, names, paper_widths(), paper_molarities());
}

std::string samples_to_csv(const std::vector<CdfSample>& samples) {
  std::string out;
  out.reserve(samples.size() * 72 + 64);
  out += kDatasetHeader;
  out += '\n';
  for (const auto& s : samples) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (f == kCharge)
        out += std::to_string(static_cast<long long>(s.features[f]));
      else
        out += format_double(s.features[f]);
      out += ',';
    }
    out += format_double(s.target);
    out += '\n';
  }
  return out;
}

std::vector<CdfSample> read_samples_csv(const std::filesystem::path& path) {
  const auto text = read_file(path);
  std::vector<CdfSample> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      require(line == kDatasetHeader, ErrorCode::kParse,
              path.string() + ": expected header " + std::string(kDatasetHeader));
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line);
    const std::string where = path.string() + " row " + std::to_string(line_no);
    require(fields.size() == kNumFeatures + 1, ErrorCode::kParse, where + ": expected 7 fields");
    CdfSample s;
    for (std::size_t f = 0; f < kNumFeatures; ++f) s.features[f] = parse_double(fields[f], where);
    s.target = parse_double(fields[kNumFeatures], where);
    require(s.target >= 0.0 && s.target <= 1.0, ErrorCode::kParse,
            where + ": cdf outside [0, 1]");
    out.push_back(s);
  }
  require(header_seen, ErrorCode::kParse, path.string() + ": empty dataset file");
  return out;
}

}  // namespace ionprof

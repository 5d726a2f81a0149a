#include "ionprof/profile.hpp"

#include <algorithm>
#include <cmath>

#include "ionprof/error.hpp"
#include "ionprof/io.hpp"

namespace ionprof {

std::vector<double> monotonize(std::span<const double> cdf_values) {
  require(!cdf_values.empty(), ErrorCode::kInvalidArgument, "monotonize needs values");
  std::vector<double> out(cdf_values.begin(), cdf_values.end());
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

namespace {

// Ticks 0, step, 2 step, ... strictly below `end`, then `end` itself. A last
// tick within 1e-9 steps of `end` is merged into it.
std::vector<double> ticks(double end, double step) {
  const auto n = static_cast<std::size_t>(std::ceil(end / step - 1e-9));
  std::vector<double> out;
  out.reserve(n + 1);
  for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<double>(i) * step);
  out.push_back(end);
  return out;
}

}  // namespace

std::vector<double> make_bin_edges(double width, double bin_size) {
  require(std::isfinite(width) && width > 0.0, ErrorCode::kOutOfRange, "width must be > 0");
  const double h = 0.5 * width;
  require(std::isfinite(bin_size) && bin_size > 0.0, ErrorCode::kOutOfRange,
          "bin size must be > 0, got " + format_double(bin_size));
  require(bin_size <= h * (1.0 + 1e-12), ErrorCode::kOutOfRange,
          "bin size " + format_double(bin_size) + " nm exceeds half the channel width (" +
              format_double(h) + " nm)");
  return ticks(h, std::min(bin_size, h));
}

std::vector<double> bin_probabilities_from_edges(std::span<const double> edge_cdf) {
  require(edge_cdf.size() >= 2, ErrorCode::kInvalidArgument, "need at least one bin");
  const auto f = monotonize(edge_cdf);
  std::vector<double> p(f.size() - 1);
  for (std::size_t b = 0; b + 1 < f.size(); ++b) p[b] = f[b + 1] - f[b];
  return p;
}

std::vector<double> bin_probabilities(const std::function<double(double)>& cdf, double width,
                                      double bin_size) {
  const auto edges = make_bin_edges(width, bin_size);
  std::vector<double> values(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) values[i] = cdf(edges[i]);
  return bin_probabilities_from_edges(values);
}

std::vector<double> to_concentration(std::span<const double> probabilities,
                                     std::span<const double> bin_edges, double molarity,
                                     double width) {
  require(bin_edges.size() == probabilities.size() + 1, ErrorCode::kInvalidArgument,
          "need one more bin edge than probabilities");
  std::vector<double> c(probabilities.size());
  for (std::size_t b = 0; b < probabilities.size(); ++b) {
    const double dr = bin_edges[b + 1] - bin_edges[b];
    require(dr > 0.0, ErrorCode::kInvalidArgument, "zero-width bin " + std::to_string(b));
    c[b] = probabilities[b] * molarity * width / (2.0 * dr);
  }
  return c;
}

MonotoneEnvelope::MonotoneEnvelope(const CdfFunction& model, const ChannelConfig& config,
                                   double resolution)
    : resolution_(resolution) {
  require(resolution > 0.0, ErrorCode::kInvalidArgument, "envelope resolution must be > 0");
  const double h = config.half_width();
  nodes_ = ticks(h, std::min(resolution, h));
  values_ = monotonize(model.evaluate_all(config, nodes_));
}

double MonotoneEnvelope::operator()(double r) const {
  if (r <= nodes_.front()) return values_.front();
  if (r >= nodes_.back()) return values_.back();
  auto k = static_cast<std::size_t>(r / resolution_);
  k = std::min(k, nodes_.size() - 2);
  while (k > 0 && nodes_[k] > r) --k;
  while (k + 2 < nodes_.size() && nodes_[k + 1] <= r) ++k;
  const double t = (r - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
  return values_[k] + t * (values_[k + 1] - values_[k]);
}

ConcentrationProfile predict_profile(const CdfFunction& model, const ChannelConfig& config,
                                     double bin_size, const ProfileOptions& options) {
  ConcentrationProfile p;
  p.config = config;
  p.bin_size = bin_size;
  p.bin_edges = make_bin_edges(config.width, bin_size);
  std::vector<double> edge_cdf;
  if (model.exact()) {
    edge_cdf = model.evaluate_all(config, p.bin_edges);
  } else {
    const MonotoneEnvelope env(model, config, options.envelope_resolution);
    edge_cdf.resize(p.bin_edges.size());
    for (std::size_t i = 0; i < p.bin_edges.size(); ++i) edge_cdf[i] = env(p.bin_edges[i]);
  }
  p.probabilities = bin_probabilities_from_edges(edge_cdf);
  p.concentrations = to_concentration(p.probabilities, p.bin_edges, config.molarity, config.width);
  return p;
}

double profile_mean_concentration(const ConcentrationProfile& profile) {
  double sum = 0.0;
  for (std::size_t b = 0; b < profile.bin_count(); ++b)
    sum += profile.concentrations[b] * (profile.bin_edges[b + 1] - profile.bin_edges[b]);
  return 2.0 * sum / profile.config.width;
}

std::size_t peak_bin(const ConcentrationProfile& profile) {
  require(profile.bin_count() > 0, ErrorCode::kInvalidArgument, "empty profile");
  const auto& c = profile.concentrations;
  // max_element returns the first maximum, i.e. the smallest r.
  return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
}

double peak_location(const ConcentrationProfile& profile) {
  return profile.bin_mid(peak_bin(profile));
}

std::string profile_to_csv(const ConcentrationProfile& profile) {
  std::string out = "r_lo,r_hi,concentration_M\n";
  for (std::size_t b = 0; b < profile.bin_count(); ++b) {
    out += format_double(profile.bin_edges[b]);
    out += ',';
    out += format_double(profile.bin_edges[b + 1]);
    out += ',';
    out += format_double(profile.concentrations[b]);
    out += '\n';
  }
  return out;
}

void append_long_rows(std::string& out, const ConcentrationProfile& profile) {
  const std::string prefix = profile.config.species.name + ',' +
                             format_double(profile.config.width) + ',' +
                             format_double(profile.config.molarity) + ',' +
                             format_double(profile.bin_size) + ',';
  for (std::size_t b = 0; b < profile.bin_count(); ++b) {
    out += prefix;
    out += format_double(profile.bin_edges[b]);
    out += ',';
    out += format_double(profile.bin_edges[b + 1]);
    out += ',';
    out += format_double(profile.concentrations[b]);
    out += '\n';
  }
}

}  // namespace ionprof

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ionprof/cdf_source.hpp"
#include "ionprof/domain.hpp"

namespace ionprof {

// Binned molar concentration over distance from the channel center.
struct ConcentrationProfile {
  ChannelConfig config;
  double bin_size = 0.0;
  std::vector<double> bin_edges;       // ascending, 0 .. width/2, nm
  std::vector<double> probabilities;   // per-bin ion fraction
  std::vector<double> concentrations;  // per-bin, M

  std::size_t bin_count() const { return concentrations.size(); }
  double bin_mid(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

// Running maximum, then clamp to [0, 1].
std::vector<double> monotonize(std::span<const double> cdf_values);

// 0, b, 2b, ... and a final (possibly partial) bin ending exactly at width/2.
// Requires 0 < bin_size <= width/2.
std::vector<double> make_bin_edges(double width, double bin_size);

// F(r2) - F(r1) per bin after monotonizing the edge values.
std::vector<double> bin_probabilities(const std::function<double(double)>& cdf, double width,
                                      double bin_size);
// Same, from CDF values already sampled at `edges`.
std::vector<double> bin_probabilities_from_edges(std::span<const double> edge_cdf);

// C_b = p_b * c * w / (2 * dr_b): the slab fraction of bin [r1, r2] under the
// symmetric |z - o| coordinate is 2 (r2 - r1) / w.
std::vector<double> to_concentration(std::span<const double> probabilities,
                                     std::span<const double> bin_edges, double molarity,
                                     double width);

// Monotone stand-in for a regressor's CDF along r: the model is evaluated on
// a fixed lattice (spacing `resolution`, plus w/2), running-maxed, clamped,
// and linearly interpolated. It does not depend on any bin size, so profiles
// at bin sizes b and b/2 telescope exactly.
class MonotoneEnvelope {
 public:
  static constexpr double kDefaultResolution = 0.001;  // nm

  MonotoneEnvelope(const CdfFunction& model, const ChannelConfig& config,
                   double resolution = kDefaultResolution);

  double operator()(double r) const;
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double resolution_;
  std::vector<double> nodes_;
  std::vector<double> values_;
};

struct ProfileOptions {
  double envelope_resolution = MonotoneEnvelope::kDefaultResolution;
};

// Evaluates `model` (exact sources directly at the bin edges, regressors
// through MonotoneEnvelope), differences and converts to concentrations.
ConcentrationProfile predict_profile(const CdfFunction& model, const ChannelConfig& config,
                                     double bin_size, const ProfileOptions& options = {});

// (2/w) * sum C_b dr_b; equals molarity * (F(w/2) - F(0)).
double profile_mean_concentration(const ConcentrationProfile& profile);

// Bin index of the maximum concentration (ties toward smaller r) and its
// midpoint.
std::size_t peak_bin(const ConcentrationProfile& profile);
double peak_location(const ConcentrationProfile& profile);

// `r_lo,r_hi,concentration_M`
std::string profile_to_csv(const ConcentrationProfile& profile);

// Long format for plotting many profiles from one source in one file; the
// header is written once by the caller.
inline constexpr std::string_view kLongProfileHeader =
    "ion,width,molarity,bin_size,r_lo,r_hi,concentration_M";
void append_long_rows(std::string& out, const ConcentrationProfile& profile);

}  // namespace ionprof

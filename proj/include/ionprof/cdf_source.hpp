#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "ionprof/domain.hpp"

namespace ionprof {

// Anything that maps (config, r) -> cumulative density: ground-truth sources
// and trained regressors alike.
class CdfFunction {
 public:
  virtual ~CdfFunction() = default;

  // out[i] = F(r[i] | config). Sizes must match.
  virtual void evaluate(const ChannelConfig& config, std::span<const double> r,
                        std::span<double> out) const = 0;

  // True when F is non-decreasing in r with F(0) = 0 and F(w/2) = 1 for every
  // config (exact ground truth). Regressors return false.
  virtual bool exact() const { return false; }

  virtual std::string_view kind() const = 0;

  double operator()(const ChannelConfig& config, double r) const {
    double out = 0.0;
    evaluate(config, std::span<const double>(&r, 1), std::span<double>(&out, 1));
    return out;
  }

  std::vector<double> evaluate_all(const ChannelConfig& config, std::span<const double> r) const {
    std::vector<double> out(r.size());
    evaluate(config, r, out);
    return out;
  }
};

}  // namespace ionprof

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ionprof/mlp.hpp"
#include "ionprof/rng.hpp"

namespace ionprof::testing {

// Random (dims) network with random standardization and a random batch;
// returns the largest relative error between backward() and central finite
// differences of mse_loss(forward(...)) with step h.
inline double gradient_check(const std::vector<int>& dims, std::size_t batch_size,
                             std::uint64_t seed, double h = 1e-5) {
  Rng rng(seed);
  MlpModel model = init_mlp(dims, seed);
  for (auto& b : model.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.3, 0.3);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    model.feature_stats.mean[f] = rng.uniform(-1, 1);
    model.feature_stats.stddev[f] = rng.uniform(0.5, 2.0);
  }
  std::vector<CdfSample> batch(batch_size);
  for (auto& s : batch) {
    for (auto& x : s.features) x = rng.uniform(-2, 2);
    s.target = rng.uniform();
  }

  auto loss_of = [&](const MlpModel& m) {
    std::vector<double> pred, tgt;
    for (const auto& s : batch) {
      pred.push_back(forward(m, s.features));
      tgt.push_back(s.target);
    }
    return mse_loss(pred, tgt);
  };
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7});
  };

  const MlpGradients g = backward(model, batch);
  double worst = 0.0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    for (Eigen::Index k = 0; k < model.weights[l].size(); ++k) {
      MlpModel plus = model, minus = model;
      plus.weights[l].data()[k] += h;
      minus.weights[l].data()[k] -= h;
      const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
      worst = std::max(worst, rel(g.weights[l].data()[k], fd));
    }
    for (Eigen::Index k = 0; k < model.biases[l].size(); ++k) {
      MlpModel plus = model, minus = model;
      plus.biases[l][k] += h;
      minus.biases[l][k] -= h;
      const double fd = (loss_of(plus) - loss_of(minus)) / (2 * h);
      worst = std::max(worst, rel(g.biases[l][k], fd));
    }
  }
  return worst;
}

}  // namespace ionprof::testing

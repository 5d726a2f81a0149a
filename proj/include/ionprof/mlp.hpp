#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ionprof/cdf_source.hpp"
#include "ionprof/domain.hpp"
#include "ionprof/sampler.hpp"

namespace ionprof {

inline const std::vector<int> kPaperHiddenDims = {1024, 512, 256, 128, 32};

// Per-feature z-score parameters fitted on the training split.
struct FeatureStats {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> stddev{1, 1, 1, 1, 1, 1};
};

// Population mean/std per feature; a feature whose spread is below
// 1e-12 * max(1, |mean|) is treated as constant and gets std 1.
FeatureStats fit_feature_stats(std::span<const CdfSample> samples);

struct MlpProvenance {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::string standardization = "zscore";
  std::string input_hash;
};

// Fully connected network: ReLU on hidden layers, sigmoid on the output.
// weights[l] is (dims[l+1] x dims[l]).
struct MlpModel {
  std::vector<int> layer_dims;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  FeatureStats feature_stats;
  MlpProvenance provenance;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// He-normal weights (variance 2/fan_in), zero biases. dims must start with
// 6 and end with 1.
MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

AdamState make_adam_state(const MlpModel& model);

// Predictions strictly inside (0, 1).
double forward(const MlpModel& model, std::span<const double> features_raw);
std::vector<double> forward_batch(const MlpModel& model, std::span<const FeatureVector> features);

double mse_loss(std::span<const double> predictions, std::span<const double> targets);

// Gradient of the batch-mean squared error w.r.t. every parameter.
// `loss` receives the batch MSE when non-null.
MlpGradients backward(const MlpModel& model, std::span<const CdfSample> batch,
                      double* loss = nullptr);

void adam_step(MlpModel& model, const MlpGradients& gradients, AdamState& state,
               double learning_rate);

struct MlpTrainOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.005;
  std::size_t batch_size = 1024;
  std::uint64_t seed = 0;
};

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_history;  // mean training MSE per epoch
};

MlpTrainResult train_mlp(MlpModel model, std::span<const CdfSample> train,
                         const MlpTrainOptions& options);

// Versioned model file {schema_version, type:"mlp", layer_dims, weights,
// biases, feature_stats, training_provenance}.
inline constexpr int kMlpSchemaVersion = 1;
std::string mlp_to_json(const MlpModel& model);
MlpModel mlp_from_json(std::string_view text);

class MlpCdf : public CdfFunction {
 public:
  explicit MlpCdf(const MlpModel& model) : model_(&model) {}
  void evaluate(const ChannelConfig& config, std::span<const double> r,
                std::span<double> out) const override;
  std::string_view kind() const override { return "mlp"; }

 private:
  const MlpModel* model_;
};

}  // namespace ionprof

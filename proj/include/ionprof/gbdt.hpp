#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ionprof/cdf_source.hpp"
#include "ionprof/domain.hpp"
#include "ionprof/sampler.hpp"

namespace ionprof {

// Internal nodes route x[feature] < threshold to `left`; leaves have
// feature == -1 and carry `value`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  int max_depth = 0;

  double predict(std::span<const double> x) const;
  int depth() const;
  std::size_t leaf_count() const;
};

// Row-major n x 6 feature matrix.
struct FeatureMatrix {
  std::vector<double> values;
  std::size_t rows = 0;

  double operator()(std::size_t i, std::size_t f) const { return values[i * kNumFeatures + f]; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * kNumFeatures, kNumFeatures};
  }
};

FeatureMatrix to_feature_matrix(std::span<const CdfSample> samples);

// Exact greedy least-squares tree. Candidate thresholds are midpoints of
// sorted distinct feature values; gain is
//   G_L^2/(n_L + lambda) + G_R^2/(n_R + lambda) - G^2/(n + lambda)
// and leaves hold G/(n + lambda). Ties go to the lowest feature index, then
// the lowest threshold.
RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> residuals, int max_depth,
                        double lambda, std::size_t min_samples = 1);

struct GbdtProvenance {
  std::size_t min_samples = 1;
  std::string input_hash;
};

struct GbdtModel {
  double base_score = 0.5;
  double shrinkage = 0.3;
  double lambda = 5.0;
  int max_depth = 15;
  std::vector<RegressionTree> trees;
  GbdtProvenance provenance;

  std::size_t rounds() const { return trees.size(); }
};

struct GbdtTrainOptions {
  std::size_t rounds = 100;
  double shrinkage = 0.3;
  int max_depth = 15;
  double lambda = 5.0;
  double base_score = 0.5;
  std::size_t min_samples = 1;
};

struct GbdtTrainResult {
  GbdtModel model;
  std::vector<double> mse_history;  // training MSE after each round
};

GbdtTrainResult train_gbdt(std::span<const CdfSample> train, const GbdtTrainOptions& options);

// base_score + sum of shrinkage * tree(x).
double predict_gbdt_raw(const GbdtModel& model, std::span<const double> features_raw);
// Raw value clamped to [0, 1].
double predict_gbdt(const GbdtModel& model, std::span<const double> features_raw);

inline constexpr int kGbdtSchemaVersion = 1;
std::string gbdt_to_json(const GbdtModel& model);
GbdtModel gbdt_from_json(std::string_view text);

class GbdtCdf : public CdfFunction {
 public:
  explicit GbdtCdf(const GbdtModel& model) : model_(&model) {}
  void evaluate(const ChannelConfig& config, std::span<const double> r,
                std::span<double> out) const override;
  std::string_view kind() const override { return "gbdt"; }

 private:
  const GbdtModel* model_;
};

}  // namespace ionprof

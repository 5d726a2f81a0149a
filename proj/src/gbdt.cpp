#include "ionprof/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "ionprof/error.hpp"

namespace ionprof {

using nlohmann::json;

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                                     : n.right);
  }
  return nodes[i].value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  return deepest;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

FeatureMatrix to_feature_matrix(std::span<const CdfSample> samples) {
  FeatureMatrix m;
  m.rows = samples.size();
  m.values.reserve(samples.size() * kNumFeatures);
  for (const auto& s : samples) m.values.insert(m.values.end(), s.features.begin(), s.features.end());
  return m;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> residuals, int max_depth,
              double lambda, std::size_t min_samples)
      : x_(x), y_(residuals), max_depth_(max_depth), lambda_(lambda),
        min_samples_(std::max<std::size_t>(1, min_samples)), go_left_(x.rows, 0),
        scratch_(x.rows) {
    const std::size_t n = x.rows;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      auto& ord = order_[f];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), std::size_t{0});
      std::stable_sort(ord.begin(), ord.end(),
                       [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
    }
  }

  RegressionTree build() {
    tree_.max_depth = max_depth_;
    grow(0, x_.rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    std::size_t n_left = 0;
  };

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = end - begin;

    double g = 0.0;
    double sum_sq = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      const double r = y_[order_[0][k]];
      g += r;
      sum_sq += r * r;
    }

    Split best;
    if (depth < max_depth_ && n >= 2 * min_samples_) best = find_split(begin, end, g);

    if (best.feature < 0 || !(best.gain > 1e-12 * sum_sq)) {
      tree_.nodes[static_cast<std::size_t>(id)].value = g / (static_cast<double>(n) + lambda_);
      return id;
    }

    partition(begin, end, best);
    const std::size_t mid = begin + best.n_left;
    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split find_split(std::size_t begin, std::size_t end, double g) const {
    const double n = static_cast<double>(end - begin);
    const double parent = g * g / (n + lambda_);
    Split best;
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      const auto& ord = order_[f];
      double g_left = 0.0;
      for (std::size_t k = begin; k + 1 < end; ++k) {
        g_left += y_[ord[k]];
        const double a = x_(ord[k], f);
        const double b = x_(ord[k + 1], f);
        if (!(a < b)) continue;
        const std::size_t n_left = k + 1 - begin;
        const std::size_t n_right = end - begin - n_left;
        if (n_left < min_samples_ || n_right < min_samples_) continue;
        const double g_right = g - g_left;
        const double gain = g_left * g_left / (static_cast<double>(n_left) + lambda_) +
                            g_right * g_right / (static_cast<double>(n_right) + lambda_) - parent;
        if (gain > best.gain) {
          double threshold = 0.5 * (a + b);
          // Adjacent doubles: the midpoint can round down onto a.
          if (!(threshold > a)) threshold = b;
          best = {gain, static_cast<int>(f), threshold, n_left};
        }
      }
    }
    return best;
  }

  void partition(std::size_t begin, std::size_t end, const Split& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t i = order_[0][k];
      go_left_[i] = x_(i, f) < split.threshold ? 1 : 0;
    }
    for (auto& ord : order_) {
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = ord[k];
        if (go_left_[i])
          ord[l++] = i;
        else
          scratch_[r++] = i;
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                ord.begin() + static_cast<std::ptrdiff_t>(l));
    }
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  int max_depth_;
  double lambda_;
  std::size_t min_samples_;
  std::array<std::vector<std::size_t>, kNumFeatures> order_;
  std::vector<char> go_left_;
  std::vector<std::size_t> scratch_;
  RegressionTree tree_;
};

}  // namespace

RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> residuals, int max_depth,
                        double lambda, std::size_t min_samples) {
  require(x.rows >= 1, ErrorCode::kInvalidArgument, "fit_tree needs at least one sample");
  require(x.values.size() == x.rows * kNumFeatures, ErrorCode::kInvalidArgument,
          "feature matrix must have 6 columns");
  require(residuals.size() == x.rows, ErrorCode::kInvalidArgument,
          "residual count does not match sample count");
  require(max_depth >= 0, ErrorCode::kInvalidArgument, "max_depth must be >= 0");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be >= 0");
  for (double r : residuals)
    require(std::isfinite(r), ErrorCode::kInvalidArgument, "residuals must be finite");
  return TreeBuilder(x, residuals, max_depth, lambda, min_samples).build();
}

GbdtTrainResult train_gbdt(std::span<const CdfSample> train, const GbdtTrainOptions& options) {
  require(!train.empty(), ErrorCode::kInvalidArgument, "training split is empty");
  require(options.shrinkage > 0.0 && options.shrinkage <= 1.0, ErrorCode::kInvalidArgument,
          "shrinkage must be in (0, 1]");
  require(options.lambda >= 0.0, ErrorCode::kInvalidArgument, "lambda must be >= 0");

  GbdtTrainResult result;
  auto& model = result.model;
  model.base_score = options.base_score;
  model.shrinkage = options.shrinkage;
  model.lambda = options.lambda;
  model.max_depth = options.max_depth;
  model.provenance.min_samples = options.min_samples;

  const auto x = to_feature_matrix(train);
  const std::size_t n = train.size();
  std::vector<double> pred(n, options.base_score);
  std::vector<double> resid(n);
  result.mse_history.reserve(options.rounds);
  for (std::size_t m = 0; m < options.rounds; ++m) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = train[i].target - pred[i];
    auto tree = fit_tree(x, resid, options.max_depth, options.lambda, options.min_samples);
    long double sse = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += options.shrinkage * tree.predict(x.row(i));
      const long double d = static_cast<long double>(train[i].target) - pred[i];
      sse += d * d;
    }
    model.trees.push_back(std::move(tree));
    result.mse_history.push_back(static_cast<double>(sse / static_cast<long double>(n)));
  }
  return result;
}

double predict_gbdt_raw(const GbdtModel& model, std::span<const double> features_raw) {
  require(features_raw.size() == kNumFeatures, ErrorCode::kInvalidArgument,
          "GBDT expects 6 features, got " + std::to_string(features_raw.size()));
  double f = model.base_score;
  for (const auto& t : model.trees) f += model.shrinkage * t.predict(features_raw);
  return f;
}

double predict_gbdt(const GbdtModel& model, std::span<const double> features_raw) {
  return std::clamp(predict_gbdt_raw(model, features_raw), 0.0, 1.0);
}

std::string gbdt_to_json(const GbdtModel& model) {
  json trees = json::array();
  for (const auto& t : model.trees) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"max_depth", t.max_depth},
                     {"nodes",
                      {{"feature", feature},
                       {"threshold", threshold},
                       {"left", left},
                       {"right", right},
                       {"value", value}}}});
  }
  json doc = {
      {"schema_version", kGbdtSchemaVersion},
      {"type", "gbdt"},
      {"feature_order", std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())},
      {"base_score", model.base_score},
      {"shrinkage", model.shrinkage},
      {"lambda", model.lambda},
      {"max_depth", model.max_depth},
      {"rounds", model.trees.size()},
      {"trees", std::move(trees)},
      {"training_provenance",
       {{"min_samples", model.provenance.min_samples},
        {"split_finding", "exact-greedy"},
        {"input_hash", model.provenance.input_hash}}},
  };
  return doc.dump() + "\n";
}

GbdtModel gbdt_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    require(doc.at("type").get<std::string>() == "gbdt", ErrorCode::kParse,
            "model file is not a gbdt model");
    require(doc.at("schema_version").get<int>() == kGbdtSchemaVersion, ErrorCode::kParse,
            "unsupported gbdt schema_version");
    GbdtModel m;
    m.base_score = doc.at("base_score").get<double>();
    m.shrinkage = doc.at("shrinkage").get<double>();
    m.lambda = doc.at("lambda").get<double>();
    m.max_depth = doc.at("max_depth").get<int>();
    require(m.shrinkage > 0.0 && m.shrinkage <= 1.0 && m.lambda >= 0.0, ErrorCode::kParse,
            "gbdt: invalid shrinkage or lambda");
    for (const auto& t : doc.at("trees")) {
      RegressionTree tree;
      tree.max_depth = t.at("max_depth").get<int>();
      const auto& nodes = t.at("nodes");
      const auto feature = nodes.at("feature").get<std::vector<int>>();
      const auto threshold = nodes.at("threshold").get<std::vector<double>>();
      const auto left = nodes.at("left").get<std::vector<int>>();
      const auto right = nodes.at("right").get<std::vector<int>>();
      const auto value = nodes.at("value").get<std::vector<double>>();
      const std::size_t count = feature.size();
      require(count > 0 && threshold.size() == count && left.size() == count &&
                  right.size() == count && value.size() == count,
              ErrorCode::kParse, "gbdt: ragged node arrays");
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (!node.is_leaf()) {
          // Children are emitted after their parent, which rules out cycles.
          require(node.feature < static_cast<int>(kNumFeatures) &&
                      node.left > static_cast<int>(i) && node.right > static_cast<int>(i) &&
                      node.left < static_cast<int>(count) && node.right < static_cast<int>(count),
                  ErrorCode::kParse, "gbdt: malformed node " + std::to_string(i));
        } else {
          require(std::isfinite(node.value), ErrorCode::kParse, "gbdt: non-finite leaf");
        }
        tree.nodes.push_back(node);
      }
      m.trees.push_back(std::move(tree));
    }
    const auto& p = doc.at("training_provenance");
    m.provenance.min_samples = p.value("min_samples", std::size_t{1});
    m.provenance.input_hash = p.value("input_hash", std::string());
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("gbdt model: ") + e.what());
  }
}

void GbdtCdf::evaluate(const ChannelConfig& config, std::span<const double> r,
                       std::span<double> out) const {
  require(r.size() == out.size(), ErrorCode::kInvalidArgument, "size mismatch");
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto f = assemble_features(config, r[i]);
    out[i] = predict_gbdt(*model_, f);
  }
}

}  // namespace ionprof

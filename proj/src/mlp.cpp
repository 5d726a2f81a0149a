#include "ionprof/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ionprof/error.hpp"
#include "ionprof/rng.hpp"

namespace ionprof {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kOutputFloor = std::numeric_limits<double>::denorm_min();
constexpr double kOutputCeil = 1.0 - std::numeric_limits<double>::epsilon() / 2;

double sigmoid(double z) {
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, kOutputFloor, kOutputCeil);
}

void check_dims(const std::vector<int>& dims) {
  require(dims.size() >= 2, ErrorCode::kInvalidArgument, "MLP needs at least input and output");
  require(dims.front() == static_cast<int>(kNumFeatures), ErrorCode::kInvalidArgument,
          "MLP input dimension must be 6");
  require(dims.back() == 1, ErrorCode::kInvalidArgument, "MLP output dimension must be 1");
  for (int d : dims) require(d >= 1, ErrorCode::kInvalidArgument, "layer widths must be >= 1");
}

void check_shapes(const MlpModel& model) {
  check_dims(model.layer_dims);
  const std::size_t layers = model.layer_dims.size() - 1;
  require(model.weights.size() == layers && model.biases.size() == layers,
          ErrorCode::kInvalidArgument, "MLP layer count does not match layer_dims");
  for (std::size_t l = 0; l < layers; ++l) {
    require(model.weights[l].rows() == model.layer_dims[l + 1] &&
                model.weights[l].cols() == model.layer_dims[l] &&
                model.biases[l].size() == model.layer_dims[l + 1],
            ErrorCode::kInvalidArgument, "MLP layer " + std::to_string(l) + " has wrong shape");
  }
}

// Standardized inputs, one column per sample.
template <typename GetFeature>
MatrixXd standardize(const MlpModel& model, std::size_t n, GetFeature&& get) {
  MatrixXd x(kNumFeatures, static_cast<Eigen::Index>(n));
  const auto& st = model.feature_stats;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& f = get(j);
    for (std::size_t k = 0; k < kNumFeatures; ++k)
      x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          (f[k] - st.mean[k]) / st.stddev[k];
  }
  return x;
}

// activations[0] is the input; activations[l+1] the output of layer l.
std::vector<MatrixXd> forward_all(const MlpModel& model, MatrixXd input) {
  const std::size_t layers = model.layer_count();
  std::vector<MatrixXd> acts;
  acts.reserve(layers + 1);
  acts.push_back(std::move(input));
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = model.weights[l] * acts.back();
    z.colwise() += model.biases[l];
    if (l + 1 < layers)
      z = z.cwiseMax(0.0);
    else
      z = z.unaryExpr([](double v) { return sigmoid(v); });
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  return n;
}

FeatureStats fit_feature_stats(std::span<const CdfSample> samples) {
  require(!samples.empty(), ErrorCode::kInvalidArgument, "cannot fit feature stats on no data");
  FeatureStats st;
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k < kNumFeatures; ++k) {
    double sum = 0.0;
    for (const auto& s : samples) sum += s.features[k];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& s : samples) {
      const double d = s.features[k] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    st.mean[k] = mean;
    st.stddev[k] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return st;
}

MlpModel init_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
  check_dims(layer_dims);
  MlpModel model;
  model.layer_dims = layer_dims;
  model.provenance.seed = seed;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double scale = std::sqrt(2.0 / fan_in);
    MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = scale * rng.normal();
    model.weights.push_back(std::move(w));
    model.biases.push_back(VectorXd::Zero(fan_out));
  }
  return model;
}

AdamState make_adam_state(const MlpModel& model) {
  AdamState st;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    st.m_weights.push_back(MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    st.v_weights.push_back(MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    st.m_biases.push_back(VectorXd::Zero(model.biases[l].size()));
    st.v_biases.push_back(VectorXd::Zero(model.biases[l].size()));
  }
  return st;
}

double forward(const MlpModel& model, std::span<const double> features_raw) {
  require(features_raw.size() == kNumFeatures, ErrorCode::kInvalidArgument,
          "MLP expects 6 features, got " + std::to_string(features_raw.size()));
  FeatureVector f;
  std::copy(features_raw.begin(), features_raw.end(), f.begin());
  return forward_batch(model, std::span<const FeatureVector>(&f, 1))[0];
}

std::vector<double> forward_batch(const MlpModel& model, std::span<const FeatureVector> features) {
  check_shapes(model);
  if (features.empty()) return {};
  auto acts = forward_all(model, standardize(model, features.size(),
                                             [&](std::size_t j) -> const FeatureVector& {
                                               return features[j];
                                             }));
  const auto& out = acts.back();
  return std::vector<double>(out.data(), out.data() + out.size());
}

double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  require(predictions.size() == targets.size(), ErrorCode::kInvalidArgument,
          "predictions and targets differ in length");
  require(!predictions.empty(), ErrorCode::kInvalidArgument, "MSE of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predictions.size());
}

MlpGradients backward(const MlpModel& model, std::span<const CdfSample> batch, double* loss) {
  check_shapes(model);
  require(!batch.empty(), ErrorCode::kInvalidArgument, "backward on an empty batch");
  const std::size_t layers = model.layer_count();
  const auto n = static_cast<Eigen::Index>(batch.size());

  auto acts = forward_all(model, standardize(model, batch.size(),
                                             [&](std::size_t j) -> const FeatureVector& {
                                               return batch[j].features;
                                             }));
  const MatrixXd& y = acts.back();  // 1 x n

  // d(mean (y - t)^2)/dy, then through the sigmoid.
  MatrixXd delta(1, n);
  double sum_sq = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double resid = y(0, j) - batch[static_cast<std::size_t>(j)].target;
    sum_sq += resid * resid;
    delta(0, j) = 2.0 * resid / static_cast<double>(n) * y(0, j) * (1.0 - y(0, j));
  }
  if (loss != nullptr) *loss = sum_sq / static_cast<double>(n);

  MlpGradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * acts[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      MatrixXd back = model.weights[l].transpose() * delta;
      // acts[l] is post-ReLU, so acts > 0 exactly where the pre-activation was.
      delta = back.cwiseProduct(
          acts[l].unaryExpr([](double a) { return a > 0.0 ? 1.0 : 0.0; }));
    }
  }
  return g;
}

void adam_step(MlpModel& model, const MlpGradients& gradients, AdamState& state,
               double learning_rate) {
  const std::size_t layers = model.layer_count();
  require(gradients.weights.size() == layers && gradients.biases.size() == layers &&
              state.m_weights.size() == layers && state.v_weights.size() == layers &&
              state.m_biases.size() == layers && state.v_biases.size() == layers,
          ErrorCode::kInvalidArgument, "Adam: layer count mismatch");
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double eps = state.epsilon;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    require(param.rows() == grad.rows() && param.cols() == grad.cols() &&
                m.rows() == grad.rows() && m.cols() == grad.cols() &&
                v.rows() == grad.rows() && v.cols() == grad.cols(),
            ErrorCode::kInvalidArgument, "Adam: parameter shape mismatch");
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < layers; ++l) {
    update(model.weights[l], gradients.weights[l], state.m_weights[l], state.v_weights[l]);
    update(model.biases[l], gradients.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

MlpTrainResult train_mlp(MlpModel model, std::span<const CdfSample> train,
                         const MlpTrainOptions& options) {
  require(!train.empty(), ErrorCode::kInvalidArgument, "training split is empty");
  require(options.batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be >= 1");
  check_shapes(model);
  model.feature_stats = fit_feature_stats(train);

  AdamState state = make_adam_state(model);
  model.provenance.epochs = options.epochs;
  model.provenance.learning_rate = options.learning_rate;
  model.provenance.batch_size = options.batch_size;
  model.provenance.beta1 = state.beta1;
  model.provenance.beta2 = state.beta2;
  model.provenance.adam_epsilon = state.epsilon;
  model.provenance.standardization = "zscore";

  MlpTrainResult result;
  result.loss_history.reserve(options.epochs);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(options.seed, std::uint64_t{0x5348554646ULL}));
  std::vector<CdfSample> batch;
  batch.reserve(options.batch_size);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train[order[i]]);
      double loss = 0.0;
      const auto grads = backward(model, batch, &loss);
      weighted += loss * static_cast<double>(batch.size());
      adam_step(model, grads, state, options.learning_rate);
    }
    result.loss_history.push_back(weighted / static_cast<double>(train.size()));
  }
  result.model = std::move(model);
  return result;
}

std::string mlp_to_json(const MlpModel& model) {
  check_shapes(model);
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) row.push_back(model.weights[l](i, j));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    biases.push_back(std::vector<double>(model.biases[l].data(),
                                         model.biases[l].data() + model.biases[l].size()));
  }
  const auto& p = model.provenance;
  json doc = {
      {"schema_version", kMlpSchemaVersion},
      {"type", "mlp"},
      {"layer_dims", model.layer_dims},
      {"feature_order", std::vector<std::string>(kFeatureNames.begin(), kFeatureNames.end())},
      {"feature_stats",
       {{"mean", model.feature_stats.mean}, {"std", model.feature_stats.stddev}}},
      {"weights", std::move(weights)},
      {"biases", std::move(biases)},
      {"training_provenance",
       {{"seed", p.seed},
        {"epochs", p.epochs},
        {"learning_rate", p.learning_rate},
        {"batch_size", p.batch_size},
        {"optimizer", {{"name", "adam"}, {"beta1", p.beta1}, {"beta2", p.beta2},
                       {"epsilon", p.adam_epsilon}}},
        {"standardization", p.standardization},
        {"input_hash", p.input_hash}}},
  };
  return doc.dump() + "\n";
}

MlpModel mlp_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    require(doc.at("type").get<std::string>() == "mlp", ErrorCode::kParse,
            "model file is not an mlp model");
    require(doc.at("schema_version").get<int>() == kMlpSchemaVersion, ErrorCode::kParse,
            "unsupported mlp schema_version");
    MlpModel m;
    m.layer_dims = doc.at("layer_dims").get<std::vector<int>>();
    check_dims(m.layer_dims);
    const auto& w = doc.at("weights");
    const auto& b = doc.at("biases");
    require(w.size() + 1 == m.layer_dims.size() && b.size() + 1 == m.layer_dims.size(),
            ErrorCode::kParse, "mlp: layer count mismatch");
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
      const int rows = m.layer_dims[l + 1];
      const int cols = m.layer_dims[l];
      require(w[l].size() == static_cast<std::size_t>(rows), ErrorCode::kParse,
              "mlp: weight rows mismatch");
      MatrixXd mat(rows, cols);
      for (int i = 0; i < rows; ++i) {
        const auto row = w[l][static_cast<std::size_t>(i)].get<std::vector<double>>();
        require(row.size() == static_cast<std::size_t>(cols), ErrorCode::kParse,
                "mlp: weight cols mismatch");
        for (int j = 0; j < cols; ++j) mat(i, j) = row[static_cast<std::size_t>(j)];
      }
      const auto bias = b[l].get<std::vector<double>>();
      require(bias.size() == static_cast<std::size_t>(rows), ErrorCode::kParse,
              "mlp: bias size mismatch");
      m.weights.push_back(std::move(mat));
      m.biases.push_back(Eigen::Map<const VectorXd>(bias.data(), rows));
    }
    const auto& fs = doc.at("feature_stats");
    m.feature_stats.mean = fs.at("mean").get<std::array<double, kNumFeatures>>();
    m.feature_stats.stddev = fs.at("std").get<std::array<double, kNumFeatures>>();
    for (double sd : m.feature_stats.stddev)
      require(sd > 0.0, ErrorCode::kParse, "mlp: feature std must be > 0");
    const auto& p = doc.at("training_provenance");
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.epochs = p.at("epochs").get<std::size_t>();
    m.provenance.learning_rate = p.at("learning_rate").get<double>();
    m.provenance.batch_size = p.at("batch_size").get<std::size_t>();
    if (p.contains("optimizer")) {
      m.provenance.beta1 = p["optimizer"].value("beta1", 0.9);
      m.provenance.beta2 = p["optimizer"].value("beta2", 0.999);
      m.provenance.adam_epsilon = p["optimizer"].value("epsilon", 1e-8);
    }
    m.provenance.standardization = p.value("standardization", std::string("zscore"));
    m.provenance.input_hash = p.value("input_hash", std::string());
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, std::string("mlp model: ") + e.what());
  }
}

void MlpCdf::evaluate(const ChannelConfig& config, std::span<const double> r,
                      std::span<double> out) const {
  require(r.size() == out.size(), ErrorCode::kInvalidArgument, "size mismatch");
  std::vector<FeatureVector> feats;
  feats.reserve(r.size());
  for (double x : r) feats.push_back(assemble_features(config, x));
  const auto pred = forward_batch(*model_, feats);
  std::copy(pred.begin(), pred.end(), out.begin());
}

}  // namespace ionprof

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ionprof/gbdt.hpp"
#include "ionprof/ground_truth.hpp"
#include "ionprof/rng.hpp"
#include "ionprof/sampler.hpp"
#include "test_support.hpp"

using namespace ionprof;
using ionprof::testing::error_of;

namespace {

std::vector<CdfSample> one_feature(const std::vector<std::pair<double, double>>& xy) {
  std::vector<CdfSample> s;
  for (auto [x, y] : xy) s.push_back({{x, 0, 0, 0, 0, 0}, y});
  return s;
}

void check_structure(const RegressionTree& t, int max_depth) {
  REQUIRE(!t.nodes.empty());
  std::set<int> seen;
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    REQUIRE(i >= 0);
    REQUIRE(i < static_cast<int>(t.nodes.size()));
    REQUIRE(seen.insert(i).second);  // no node reached twice
    REQUIRE(d <= max_depth);
    const auto& n = t.nodes[i];
    if (n.is_leaf()) {
      REQUIRE(std::isfinite(n.value));
    } else {
      stack.push_back({n.left, d + 1});
      stack.push_back({n.right, d + 1});
    }
  }
  CHECK(seen.size() == t.nodes.size());
  CHECK(t.depth() <= max_depth);
}

struct BruteSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exhaustive depth-1 search written independently of the presorted builder.
BruteSplit brute_force_split(const FeatureMatrix& x, const std::vector<double>& g, double lambda) {
  const std::size_t n = x.rows;
  double total = 0.0;
  for (double v : g) total += v;
  const double parent = total * total / (n + lambda);
  BruteSplit best;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < n; ++i) values.insert(x(i, f));
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      double thr = 0.5 * (sorted[k] + sorted[k + 1]);
      if (!(thr > sorted[k])) thr = sorted[k + 1];
      double gl = 0, gr = 0;
      std::size_t nl = 0, nr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (x(i, f) < thr) gl += g[i], ++nl;
        else gr += g[i], ++nr;
      }
      const double gain = gl * gl / (nl + lambda) + gr * gr / (nr + lambda) - parent;
      if (gain > best.gain * (1 + 1e-12) + 1e-15) best = {static_cast<int>(f), thr, gain};
    }
  }
  return best;
}

}  // namespace

TEST_CASE("fit_tree hand cases") {
  const auto equal = one_feature({{0, 0.3}, {1, 0.3}, {2, 0.3}});
  const auto xe = to_feature_matrix(equal);
  const std::vector<double> re = {0.3, 0.3, 0.3};
  const auto t0 = fit_tree(xe, re, 5, 0.0);
  REQUIRE(t0.nodes.size() == 1);
  CHECK(t0.nodes[0].value == doctest::Approx(0.3));

  const auto two = one_feature({{0, 0}, {1, 1}});
  const auto x2 = to_feature_matrix(two);
  const std::vector<double> r2 = {0.0, 1.0};
  const auto t1 = fit_tree(x2, r2, 1, 0.0);
  REQUIRE(t1.nodes.size() == 3);
  CHECK(t1.nodes[0].feature == kR);
  CHECK(t1.nodes[0].threshold == 0.5);
  CHECK(t1.nodes[t1.nodes[0].left].value == 0.0);
  CHECK(t1.nodes[t1.nodes[0].right].value == 1.0);
  CHECK(t1.predict(std::vector<double>{0.2, 0, 0, 0, 0, 0}) == 0.0);
  CHECK(t1.predict(std::vector<double>{0.5, 0, 0, 0, 0, 0}) == 1.0);  // x >= threshold goes right

  const auto leaf = fit_tree(x2, r2, 0, 5.0);
  REQUIRE(leaf.nodes.size() == 1);
  CHECK(leaf.nodes[0].value == doctest::Approx(1.0 / 7.0));
  CHECK(leaf.leaf_count() == 1);

  CHECK(error_of([] { fit_tree(FeatureMatrix{}, std::vector<double>{}, 3, 1.0); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("fit_tree root split agrees with exhaustive search") {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<CdfSample> s(25);
    for (auto& x : s) {
      for (auto& v : x.features) v = std::round(rng.uniform(0, 6));  // ties on purpose
      x.target = rng.uniform(-1, 1);
    }
    const auto x = to_feature_matrix(s);
    std::vector<double> g;
    for (const auto& v : s) g.push_back(v.target);
    const double lambda = trial % 3;
    const auto tree = fit_tree(x, g, 1, lambda);
    const auto brute = brute_force_split(x, g, lambda);
    if (brute.feature < 0) {
      CHECK(tree.nodes.size() == 1);
      continue;
    }
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == brute.feature);
    CHECK(tree.nodes[0].threshold == brute.threshold);
    double gl = 0, gr = 0;
    std::size_t nl = 0, nr = 0;
    for (std::size_t i = 0; i < x.rows; ++i)
      if (x(i, brute.feature) < brute.threshold) gl += g[i], ++nl;
      else gr += g[i], ++nr;
    CHECK(tree.nodes[tree.nodes[0].left].value == doctest::Approx(gl / (nl + lambda)));
    CHECK(tree.nodes[tree.nodes[0].right].value == doctest::Approx(gr / (nr + lambda)));
  }
}

TEST_CASE("deep trees memorize distinct points and stay well formed") {
  Rng rng(3);
  std::vector<CdfSample> s(200);
  for (auto& x : s) {
    for (auto& v : x.features) v = rng.uniform();
    x.target = rng.uniform();
  }
  const auto x = to_feature_matrix(s);
  std::vector<double> g;
  for (const auto& v : s) g.push_back(v.target);
  // Greedy splits can peel off single points, so allow depth up to n.
  const auto tree = fit_tree(x, g, 200, 0.0);
  check_structure(tree, 200);
  CHECK(tree.leaf_count() == 200);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(tree.predict(x.row(i)) == doctest::Approx(g[i]));

  const auto shallow = fit_tree(x, g, 3, 1.0);
  check_structure(shallow, 3);
  CHECK(shallow.leaf_count() <= 8);
  const auto limited = fit_tree(x, g, 200, 0.0, 20);
  check_structure(limited, 200);
  CHECK(limited.leaf_count() < tree.leaf_count());
}

TEST_CASE("train_gbdt hand cases and defaults") {
  const auto flat = one_feature({{0, 0.5}, {1, 0.5}, {2, 0.5}});
  const auto f = train_gbdt(flat, {3, 0.3, 4, 5.0, 0.5, 1});
  REQUIRE(f.model.rounds() == 3);
  for (const auto& t : f.model.trees) {
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].value == 0.0);
  }
  CHECK(predict_gbdt(f.model, flat[1].features) == 0.5);

  const auto four = one_feature({{0, 0}, {1, 1}, {2, 1}, {3, 1}});
  const auto one = train_gbdt(four, {1, 1.0, 0, 5.0, 0.5, 1});
  REQUIRE(one.model.rounds() == 1);
  CHECK(one.model.trees[0].nodes[0].value == doctest::Approx(1.0 / 9.0));
  for (double x : {-5.0, 0.0, 1.5, 100.0})
    CHECK(predict_gbdt(one.model, std::vector<double>{x, 0, 0, 0, 0, 0}) ==
          doctest::Approx(0.5 + 1.0 / 9.0));
  CHECK(predict_gbdt(one.model, four[0].features) == doctest::Approx(0.6111).epsilon(1e-4));

  const GbdtTrainOptions d;
  CHECK(d.max_depth == 15);
  CHECK(d.lambda == 5.0);
  CHECK(d.rounds == 100);
  CHECK(d.shrinkage == 0.3);
  CHECK(d.base_score == 0.5);
}

TEST_CASE("predict_gbdt clamps the raw ensemble") {
  GbdtModel empty;
  CHECK(predict_gbdt(empty, std::vector<double>{1, 2, 3, 4, 5, 6}) == 0.5);
  GbdtModel neg;
  neg.base_score = -0.2;
  CHECK(predict_gbdt_raw(neg, std::vector<double>{1, 2, 3, 4, 5, 6}) == -0.2);
  CHECK(predict_gbdt(neg, std::vector<double>{1, 2, 3, 4, 5, 6}) == 0.0);
  neg.base_score = 1.3;
  CHECK(predict_gbdt(neg, std::vector<double>{1, 2, 3, 4, 5, 6}) == 1.0);
  CHECK(error_of([&] { predict_gbdt(neg, std::vector<double>{1, 2}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("boosting never increases training MSE; JSON round-trips; deterministic") {
  const SyntheticOracle oracle;
  const auto grid = make_grid(ion_catalog(), {"Na", "Mg"}, {1.0, 2.0, 3.0}, {1.0, 3.0});
  const auto data = build_dataset(grid, oracle, 200, 5).train;
  const auto r = train_gbdt(data, {15, 0.3, 8, 5.0, 0.5, 1});
  REQUIRE(r.mse_history.size() == 15);
  for (std::size_t m = 1; m < r.mse_history.size(); ++m) CHECK(r.mse_history[m] <= r.mse_history[m - 1]);
  // First-round MSE recomputed from predictions.
  const auto first = train_gbdt(data, {1, 0.3, 8, 5.0, 0.5, 1});
  double sse = 0.0;
  for (const auto& s : data) sse += std::pow(predict_gbdt_raw(first.model, s.features) - s.target, 2);
  CHECK(first.mse_history[0] == doctest::Approx(sse / data.size()).epsilon(1e-12));
  for (const auto& t : r.model.trees) check_structure(t, 8);

  const auto text = gbdt_to_json(r.model);
  const auto back = gbdt_from_json(text);
  CHECK(gbdt_to_json(back) == text);
  for (const auto& s : data) CHECK(predict_gbdt_raw(back, s.features) == predict_gbdt_raw(r.model, s.features));
  CHECK(gbdt_to_json(train_gbdt(data, {15, 0.3, 8, 5.0, 0.5, 1}).model) == text);
  CHECK(error_of([] { gbdt_from_json(R"({"schema_version":1,"type":"mlp"})"); }) == ErrorCode::kParse);

  const GbdtCdf cdf(r.model);
  const ChannelConfig c(ion_catalog().at("Na"), 2.0, 1.0);
  CHECK(cdf(c, 0.3) == predict_gbdt(r.model, assemble_features(c, 0.3)));
  CHECK_FALSE(cdf.exact());
}

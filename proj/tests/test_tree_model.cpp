// SPDX-License-Identifier: Apache-2.0
#include "efab/tree_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "efab/pixel.hpp"
#include "test_util.hpp"

using namespace efab;

namespace {

// Right-leaning chain with `depth` comparisons on feature 0, thresholds 0, 1, 2, ...
TreeModel chain(int depth) {
  TreeModel m;
  m.nodes.clear();
  for (int d = 0; d < depth; ++d) {
    const int me = static_cast<int>(m.nodes.size());
    m.nodes.push_back(TreeNode{0, static_cast<double>(d), me + 1, me + 2, 0.0});
    m.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.25 * (d + 1)});
  }
  m.nodes.push_back(TreeNode{-1, 0.0, -1, -1, -1.0});
  return m;
}

// Walks the tree with its own comparison, independent of find_leaf.
double walk_score(const TreeModel& m, const FeatureVector& x) {
  const TreeNode* n = &m.nodes[0];
  while (n->feature >= 0) {
    const bool go_right = x[static_cast<std::size_t>(n->feature)] > n->threshold;
    n = &m.nodes[static_cast<std::size_t>(go_right ? n->right : n->left)];
  }
  return m.base_score + m.learning_rate * n->leaf;
}

double brute_auc(const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += p[i] > p[j] ? 1.0 : p[i] == p[j] ? 0.5 : 0.0;
      }
    }
  }
  return wins / pairs;
}

struct Split {
  LabeledFeatures train;
  LabeledFeatures test;
};

const Split& synthetic() {
  static const Split s = [] {
    const auto [tr, te] = split_dataset(synth_dataset(6000, 12), 0.8, 12);
    return Split{featurize(tr), featurize(te)};
  }();
  return s;
}

const TreeModel& synthetic_model() {
  static const TreeModel m = [] {
    TrainOptions o;
    o.max_splits = 9;
    return train_tree(synthetic().train.x, synthetic().train.y, o);
  }();
  return m;
}

}  // namespace

TEST(Fixed28, Quantization) {
  EXPECT_EQ(Fixed28::quantize(0.4922).raw, 252);
  EXPECT_DOUBLE_EQ(Fixed28::quantize(0.4922).value(), 0.4921875);
  EXPECT_EQ(Fixed28::quantize(1.5 / 512).raw, 2);  // ties to even
  EXPECT_EQ(Fixed28::quantize(2.5 / 512).raw, 2);
  EXPECT_EQ(Fixed28::quantize(-1.0).raw, -512);
  EXPECT_EQ(Fixed28::quantize(-1.0).bits(), (1u << 28) - 512u);
  EXPECT_ERRC(Fixed28::quantize(262144.0), Errc::Overflow);
  EXPECT_EQ(Fixed28::quantize(-262144.0).raw, Fixed28::kRawMin);
  EXPECT_EQ(Fixed28::saturate(1e9).raw, Fixed28::kRawMax);
  EXPECT_EQ(Fixed28::saturate(-1e9).raw, Fixed28::kRawMin);
  EXPECT_EQ(Fixed28::saturate(std::nan("")).raw, 0);
  EXPECT_EQ(sat_add(Fixed28::from_raw(Fixed28::kRawMax), Fixed28::from_raw(1)).raw, Fixed28::kRawMax);
  EXPECT_EQ(sat_add(Fixed28::from_raw(-5), Fixed28::from_raw(3)).raw, -2);
}

TEST(Fixed28, RoundingErrorBound) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 2000.0;
    EXPECT_LE(std::abs(Fixed28::quantize(v).value() - v), 0.5 / 512);
  }
}

TEST(ScoreThreshold, Logit) {
  EXPECT_EQ(score_threshold(0.5).raw, 0);
  EXPECT_EQ(score_threshold(0.75).raw, Fixed28::quantize(std::log(3.0)).raw);
  EXPECT_LT(score_threshold(0.25).raw, 0);
  EXPECT_DOUBLE_EQ(sigmoid(logit(0.3)), 0.3);
}

TEST(Schema, RoundTrip) {
  EXPECT_EQ(import_model(export_model(synthetic_model())), synthetic_model());
  const TreeModel c = chain(5);
  EXPECT_EQ(import_model(export_model(c)), c);
  EXPECT_EQ(export_model(import_model(export_model(c))), export_model(c));
}

TEST(Schema, Rejections) {
  EXPECT_ERRC(validate_model(chain(6)), Errc::DepthExceeded);
  EXPECT_NO_THROW(validate_model(chain(5)));
  TreeModel bad = chain(1);
  bad.nodes[0].feature = 14;
  EXPECT_ERRC(validate_model(bad), Errc::FeatureIndexOutOfRange);

  const std::string good = export_model(chain(1));
  auto with = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  EXPECT_ERRC(import_model(with("\"feature\": 0", "\"feature\": 14")), Errc::FeatureIndexOutOfRange);
  EXPECT_ERRC(import_model(with("\"feature\": 0", "\"feature\": -1")), Errc::FeatureIndexOutOfRange);
  EXPECT_ERRC(import_model(with("efab-tree", "xgboost")), Errc::SchemaError);
  EXPECT_ERRC(import_model(with("\"version\": 1", "\"version\": 2")), Errc::SchemaError);
  EXPECT_ERRC(import_model(with("\"learning_rate\"", "\"lr\"")), Errc::SchemaError);
  EXPECT_ERRC(import_model("{"), Errc::SchemaError);
  EXPECT_ERRC(import_model("[]"), Errc::SchemaError);
}

TEST(Schema, DeepJsonRejected) {
  // Six nested comparisons.
  std::string tree = "{\"leaf\": 0}";
  for (int d = 0; d < 6; ++d) {
    tree = "{\"feature\": 1, \"threshold\": 0, \"left\": {\"leaf\": 1}, \"right\": " + tree + "}";
  }
  const std::string text =
      "{\"format\": \"efab-tree\", \"version\": 1, \"base_score\": 0, \"learning_rate\": 1, \"tree\": " + tree + "}";
  EXPECT_ERRC(import_model(text), Errc::DepthExceeded);
}

TEST(Inference, SingleLeafIsPrior) {
  const TreeModel m;
  FeatureVector x{};
  EXPECT_DOUBLE_EQ(predict(m, x).probability, 0.5);
  EXPECT_EQ(find_leaf(m, x), 0);
}

TEST(Inference, TiesGoLeft) {
  const TreeModel m = chain(1);
  FeatureVector x{};
  x[0] = 0.0;
  EXPECT_EQ(find_leaf(m, x), 1);
  x[0] = std::nextafter(0.0, 1.0);
  EXPECT_EQ(find_leaf(m, x), 2);
}

TEST(Inference, MatchesIndependentWalk) {
  const TreeModel& m = synthetic_model();
  for (const FeatureVector& x : synthetic().test.x) {
    const double z = walk_score(m, x);
    EXPECT_DOUBLE_EQ(predict(m, x).score, z);
    EXPECT_DOUBLE_EQ(predict(m, x).probability, 1.0 / (1.0 + std::exp(-z)));
  }
}

TEST(Training, SeparableFeatureGivesOneSplit) {
  std::vector<FeatureVector> x(1000);
  std::vector<std::uint8_t> y(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i][3] = static_cast<double>(i);
    y[i] = i >= 500;  // balanced, so the prior sits at p = 0.5
  }
  const TreeModel m = train_tree(x, y);
  EXPECT_EQ(m.depth(), 1);
  EXPECT_EQ(m.nodes[0].feature, 3);
  EXPECT_GE(m.nodes[0].threshold, 499.0);
  EXPECT_LT(m.nodes[0].threshold, 500.0);
  const EvalReport r = evaluate(m, x, y, 0.5);
  EXPECT_EQ(r.signal_efficiency, 1.0);
  EXPECT_EQ(r.background_rejection, 1.0);
}

TEST(Training, RandomLabelsGiveChanceAuc) {
  std::mt19937_64 rng(3);
  std::vector<FeatureVector> x(4000);
  std::vector<std::uint8_t> y(4000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double& v : x[i]) {
      v = static_cast<double>(rng() % 1000);
    }
    y[i] = rng() & 1U;
  }
  const auto [xtr, xte] = split_dataset(x, 0.5, 1);
  const auto [ytr, yte] = split_dataset(y, 0.5, 1);
  const TreeModel m = train_tree(xtr, ytr);
  EXPECT_NEAR(roc_auc(predict_all(m, xte), yte), 0.5, 0.05);
}

TEST(Training, SyntheticTracksAreSeparable) {
  const TreeModel& m = synthetic_model();
  EXPECT_LE(m.internal_nodes(), 9);
  EXPECT_LE(m.depth(), kMaxTreeDepth);
  EXPECT_GT(roc_auc(predict_all(m, synthetic().test.x), synthetic().test.y), 0.75);
}

TEST(Training, Errors) {
  std::vector<FeatureVector> x(10);
  std::vector<std::uint8_t> y(10, 1);
  EXPECT_ERRC(train_tree(x, y), Errc::SingleClassDataset);
  EXPECT_ERRC(train_tree(std::span<const FeatureVector>{}, std::span<const std::uint8_t>{}), Errc::EmptyDataset);
}

TEST(Metrics, ThresholdExtremes) {
  const std::vector<double> p{0.1, 0.4, 0.6, 0.9};
  const std::vector<std::uint8_t> y{0, 1, 0, 1};
  const EvalReport all_bg = evaluate_probabilities(p, y, 0.0);
  EXPECT_EQ(all_bg.signal_efficiency, 0.0);
  EXPECT_EQ(all_bg.background_rejection, 1.0);
  const EvalReport none = evaluate_probabilities(p, y, std::nextafter(1.0, 2.0));
  EXPECT_EQ(none.signal_efficiency, 1.0);
  EXPECT_EQ(none.background_rejection, 0.0);
  const EvalReport mid = evaluate_probabilities(p, y, 0.5);
  EXPECT_EQ(mid.signal_efficiency, 0.5);
  EXPECT_EQ(mid.background_rejection, 0.5);
  EXPECT_EQ(mid.n_signal, 2u);
  EXPECT_ERRC(evaluate_probabilities(p, std::vector<std::uint8_t>(4, 0), 0.5), Errc::SingleClassDataset);
}

TEST(Metrics, AucMatchesBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p(200);
    std::vector<std::uint8_t> y(200);
    for (std::size_t i = 0; i < p.size(); ++i) {
      y[i] = i < 2 ? static_cast<std::uint8_t>(i) : rng() & 1U;
      p[i] = static_cast<double>(rng() % 20) / 20.0 + (y[i] ? 0.1 : 0.0);  // many ties
    }
    EXPECT_NEAR(roc_auc(p, y), brute_auc(p, y), 1e-12);
  }
}

TEST(Metrics, SweepIsMonotone) {
  const auto p = predict_all(synthetic_model(), synthetic().test.x);
  const auto sweep = threshold_sweep(p, synthetic().test.y);
  ASSERT_EQ(sweep.size(), 101u);
  EXPECT_EQ(sweep.front().threshold, 0.0);
  EXPECT_EQ(sweep.back().threshold, 1.0);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    EXPECT_GE(sweep[i].signal_efficiency, sweep[i - 1].signal_efficiency);
    EXPECT_LE(sweep[i].background_rejection, sweep[i - 1].background_rejection);
  }
}

TEST(Quantized, AgreesWithFloatAwayFromBoundaries) {
  const TreeModel& m = synthetic_model();
  const QuantTreeModel q = quantize(m);
  ASSERT_EQ(q.nodes.size(), m.nodes.size());
  std::size_t same_leaf = 0;
  for (const FeatureVector& x : synthetic().test.x) {
    const QuantPrediction qp = predict_quantized(q, x);
    if (qp.leaf != find_leaf(m, x)) {
      continue;
    }
    ++same_leaf;
    // Base and leaf each carry at most half an LSB of rounding error.
    EXPECT_LE(std::abs(qp.score.value() - predict(m, x).score), 1.0 / 512);
  }
  EXPECT_GE(static_cast<double>(same_leaf), 0.99 * static_cast<double>(synthetic().test.x.size()));
  const auto pf = predict_all(m, synthetic().test.x);
  const auto pq = predict_all(q, synthetic().test.x);
  EXPECT_NEAR(roc_auc(pq, synthetic().test.y), roc_auc(pf, synthetic().test.y), 0.01);
}

TEST(Quantized, LeafScaledByLearningRate) {
  TreeModel m = chain(1);
  m.learning_rate = 0.5;
  m.base_score = 0.25;
  const QuantTreeModel q = quantize(m);
  EXPECT_EQ(q.base_score.raw, 128);
  EXPECT_EQ(q.nodes[1].leaf.raw, Fixed28::quantize(0.125).raw);
  FeatureVector x{};
  x[0] = -3.0;
  EXPECT_EQ(predict_quantized(q, x).score.raw, 128 + 64);
  EXPECT_EQ(predict_quantized(q, quantize_features(x)).leaf, 1);
}

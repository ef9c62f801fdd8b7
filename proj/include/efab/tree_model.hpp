// SPDX-License-Identifier: Apache-2.0
//
// Single-tree gradient-boosted classifier: training, schema, quantized inference, metrics.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "efab/fixed_point.hpp"
#include "efab/pixel.hpp"

namespace efab {

inline constexpr int kMaxTreeDepth = 5;

/// Internal nodes have feature >= 0 and child indices; leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf = 0.0;
  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Node 0 is the root; nodes are stored in preorder.
struct TreeModel {
  double base_score = 0.0;
  double learning_rate = 1.0;
  std::vector<TreeNode> nodes{TreeNode{}};

  int depth() const;
  int internal_nodes() const;
  int leaves() const { return static_cast<int>(nodes.size()) - internal_nodes(); }
  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

/// Throws SchemaError, DepthExceeded or FeatureIndexOutOfRange.
void validate_model(const TreeModel& model);

struct TrainOptions {
  int max_depth = kMaxTreeDepth;
  double learning_rate = 0.1;
  std::size_t min_leaf = 32;
  /// Best-first growth stops after this many splits; 0 means no limit.
  int max_splits = 0;
};

/// One boosting round from the log-odds prior. Labels: 1 = background.
/// Throws EmptyDataset or SingleClassDataset.
TreeModel train_tree(std::span<const FeatureVector> x, std::span<const std::uint8_t> y,
                     const TrainOptions& options = {});

std::string export_model(const TreeModel& model);
TreeModel import_model(std::string_view text);

struct Prediction {
  double score = 0.0;
  double probability = 0.0;  // of background
};

/// Index of the leaf reached; features equal to a threshold go left.
int find_leaf(const TreeModel& model, const FeatureVector& x);
Prediction predict(const TreeModel& model, const FeatureVector& x);

double sigmoid(double z);
double logit(double p);

struct QuantNode {
  int feature = -1;
  Fixed28 threshold;
  int left = -1;
  int right = -1;
  Fixed28 leaf;  // learning_rate * leaf value
  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const QuantNode&, const QuantNode&) = default;
};

struct QuantTreeModel {
  Fixed28 base_score;
  std::vector<QuantNode> nodes;
  friend bool operator==(const QuantTreeModel&, const QuantTreeModel&) = default;
};

/// Round-to-nearest quantization of thresholds, scaled leaves and base score. Throws Overflow.
QuantTreeModel quantize(const TreeModel& model);
/// logit(tau) quantized; background iff score >= this value.
Fixed28 score_threshold(double tau);

using QuantFeatures = std::array<Fixed28, kNumFeatures>;
QuantFeatures quantize_features(const FeatureVector& x);  // saturating

struct QuantPrediction {
  Fixed28 score;
  double probability = 0.0;
  int leaf = 0;
};
QuantPrediction predict_quantized(const QuantTreeModel& model, const QuantFeatures& x);
QuantPrediction predict_quantized(const QuantTreeModel& model, const FeatureVector& x);

struct EvalReport {
  double signal_efficiency = 0.0;
  double background_rejection = 0.0;
  double threshold = 0.0;
  std::size_t n_signal = 0;
  std::size_t n_background = 0;
};

/// Background iff probability >= threshold. Throws SingleClassDataset.
EvalReport evaluate_probabilities(std::span<const double> probabilities, std::span<const std::uint8_t> y,
                                  double threshold);
EvalReport evaluate(const TreeModel& model, std::span<const FeatureVector> x, std::span<const std::uint8_t> y,
                    double threshold);
EvalReport evaluate(const QuantTreeModel& model, std::span<const FeatureVector> x,
                    std::span<const std::uint8_t> y, double threshold);

std::vector<double> predict_all(const TreeModel& model, std::span<const FeatureVector> x);
std::vector<double> predict_all(const QuantTreeModel& model, std::span<const FeatureVector> x);

/// Probability that a random background example outscores a random signal one (ties = 1/2).
double roc_auc(std::span<const double> probabilities, std::span<const std::uint8_t> y);

/// Efficiency/rejection at `points` evenly spaced thresholds in [0, 1].
std::vector<EvalReport> threshold_sweep(std::span<const double> probabilities, std::span<const std::uint8_t> y,
                                        int points = 101);

}  // namespace efab

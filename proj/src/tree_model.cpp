// SPDX-License-Identifier: Apache-2.0
#include "efab/tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <queue>

#include "json.hpp"

namespace efab {
namespace {

using Json = nlohmann::ordered_json;

void check_labels(std::span<const std::uint8_t> y) {
  if (y.empty()) {
    throw Error(Errc::EmptyDataset, "dataset is empty");
  }
  const auto pos = std::count_if(y.begin(), y.end(), [](std::uint8_t v) { return v != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == y.size()) {
    throw Error(Errc::SingleClassDataset, "dataset contains only one class");
  }
}

int subtree_depth(const std::vector<TreeNode>& nodes, int i) {
  const TreeNode& n = nodes[static_cast<std::size_t>(i)];
  if (n.is_leaf()) {
    return 0;
  }
  return 1 + std::max(subtree_depth(nodes, n.left), subtree_depth(nodes, n.right));
}

// Training -------------------------------------------------------------------

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct Work {
  std::vector<std::uint32_t> rows;
  int depth = 0;
  int node = 0;  // index in the temporary tree
  Split split;
  std::size_t order = 0;
};

struct WorkOrder {
  bool operator()(const Work* a, const Work* b) const {
    if (a->split.gain != b->split.gain) {
      return a->split.gain < b->split.gain;
    }
    return a->order > b->order;
  }
};

class Trainer {
 public:
  Trainer(std::span<const FeatureVector> x, std::span<const std::uint8_t> y, const TrainOptions& opt)
      : x_(x), y_(y), opt_(opt) {}

  TreeModel run() {
    check_labels(y_);
    if (x_.size() != y_.size()) {
      throw Error(Errc::InvalidArgument, "feature and label counts differ");
    }
    const double n = static_cast<double>(y_.size());
    const double p0 = static_cast<double>(std::count(y_.begin(), y_.end(), 1)) / n;
    hess_ = p0 * (1.0 - p0);
    resid_.resize(y_.size());
    for (std::size_t i = 0; i < y_.size(); ++i) {
      resid_[i] = (y_[i] ? 1.0 : 0.0) - p0;
    }

    std::vector<std::unique_ptr<Work>> pool;
    std::priority_queue<Work*, std::vector<Work*>, WorkOrder> open;
    auto make = [&](std::vector<std::uint32_t> rows, int depth) {
      auto w = std::make_unique<Work>();
      w->rows = std::move(rows);
      w->depth = depth;
      w->node = static_cast<int>(tmp_.size());
      tmp_.push_back(TreeNode{-1, 0.0, -1, -1, leaf_value(w->rows)});
      w->order = pool.size();
      if (depth < opt_.max_depth) {
        w->split = best_split(w->rows);
      }
      if (w->split.feature >= 0) {
        open.push(w.get());
      }
      pool.push_back(std::move(w));
    };
    std::vector<std::uint32_t> all(y_.size());
    std::iota(all.begin(), all.end(), 0u);
    make(std::move(all), 0);

    int splits = 0;
    while (!open.empty() && (opt_.max_splits <= 0 || splits < opt_.max_splits)) {
      Work* w = open.top();
      open.pop();
      std::vector<std::uint32_t> l;
      std::vector<std::uint32_t> r;
      for (std::uint32_t i : w->rows) {
        (x_[i][static_cast<std::size_t>(w->split.feature)] <= w->split.threshold ? l : r).push_back(i);
      }
      const int node = w->node;
      tmp_[static_cast<std::size_t>(node)].feature = w->split.feature;
      tmp_[static_cast<std::size_t>(node)].threshold = w->split.threshold;
      tmp_[static_cast<std::size_t>(node)].leaf = 0.0;
      const int depth = w->depth;
      tmp_[static_cast<std::size_t>(node)].left = static_cast<int>(tmp_.size());
      make(std::move(l), depth + 1);
      tmp_[static_cast<std::size_t>(node)].right = static_cast<int>(tmp_.size());
      make(std::move(r), depth + 1);
      ++splits;
    }

    TreeModel m;
    m.base_score = std::log(p0 / (1.0 - p0));
    m.learning_rate = opt_.learning_rate;
    m.nodes.clear();
    preorder(0, m.nodes);
    return m;
  }

 private:
  double leaf_value(const std::vector<std::uint32_t>& rows) const {
    double s = 0.0;
    for (std::uint32_t i : rows) {
      s += resid_[i];
    }
    return s / (hess_ * static_cast<double>(rows.size()));
  }

  Split best_split(const std::vector<std::uint32_t>& rows) const {
    Split best;
    const std::size_t n = rows.size();
    if (n < 2 * opt_.min_leaf) {
      return best;
    }
    double total = 0.0;
    for (std::uint32_t i : rows) {
      total += resid_[i];
    }
    const double base = total * total / static_cast<double>(n);
    std::vector<std::uint32_t> order(rows);
    for (int f = 0; f < kNumFeatures; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) { return x_[a][fi] < x_[b][fi]; });
      double left = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        left += resid_[order[k - 1]];
        const double a = x_[order[k - 1]][fi];
        const double b = x_[order[k]][fi];
        if (k < opt_.min_leaf || n - k < opt_.min_leaf || !(a < b)) {
          continue;
        }
        const double right = total - left;
        const double gain = left * left / static_cast<double>(k) +
                            right * right / static_cast<double>(n - k) - base;
        if (gain > best.gain + 1e-12) {
          double t = a + (b - a) / 2.0;
          if (!(t < b)) {
            t = a;
          }
          best = Split{gain, f, t};
        }
      }
    }
    return best;
  }

  void preorder(int i, std::vector<TreeNode>& out) const {
    const TreeNode& n = tmp_[static_cast<std::size_t>(i)];
    const std::size_t me = out.size();
    out.push_back(n);
    if (n.is_leaf()) {
      return;
    }
    out[me].left = static_cast<int>(out.size());
    preorder(n.left, out);
    out[me].right = static_cast<int>(out.size());
    preorder(n.right, out);
  }

  std::span<const FeatureVector> x_;
  std::span<const std::uint8_t> y_;
  const TrainOptions& opt_;
  std::vector<double> resid_;
  double hess_ = 0.25;
  std::vector<TreeNode> tmp_;
};

// Schema ---------------------------------------------------------------------

Json node_to_json(const std::vector<TreeNode>& nodes, int i) {
  const TreeNode& n = nodes[static_cast<std::size_t>(i)];
  Json j;
  if (n.is_leaf()) {
    j["leaf"] = n.leaf;
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["left"] = node_to_json(nodes, n.left);
  j["right"] = node_to_json(nodes, n.right);
  return j;
}

[[noreturn]] void schema(const std::string& msg) { throw Error(Errc::SchemaError, msg); }

double number_field(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    schema(std::string("missing or non-numeric '") + key + "'");
  }
  return j.at(key).get<double>();
}

void node_from_json(const Json& j, int depth, std::vector<TreeNode>& out) {
  if (!j.is_object()) {
    schema("tree node must be an object");
  }
  const std::size_t me = out.size();
  out.emplace_back();
  if (j.contains("leaf")) {
    if (j.size() != 1) {
      schema("leaf node has extra fields");
    }
    out[me].leaf = number_field(j, "leaf");
    return;
  }
  if (!j.contains("feature") || !j.at("feature").is_number_integer()) {
    schema("internal node needs an integer 'feature'");
  }
  const auto f = j.at("feature").get<std::int64_t>();
  if (f < 0 || f >= kNumFeatures) {
    throw Error(Errc::FeatureIndexOutOfRange,
                "feature index " + std::to_string(f) + " outside 0.." + std::to_string(kNumFeatures - 1));
  }
  if (depth >= kMaxTreeDepth) {
    throw Error(Errc::DepthExceeded, "tree deeper than " + std::to_string(kMaxTreeDepth));
  }
  out[me].feature = static_cast<int>(f);
  out[me].threshold = number_field(j, "threshold");
  if (!j.contains("left") || !j.contains("right")) {
    schema("internal node needs 'left' and 'right'");
  }
  out[me].left = static_cast<int>(out.size());
  node_from_json(j.at("left"), depth + 1, out);
  out[me].right = static_cast<int>(out.size());
  node_from_json(j.at("right"), depth + 1, out);
}

}  // namespace

int TreeModel::depth() const { return nodes.empty() ? 0 : subtree_depth(nodes, 0); }

int TreeModel::internal_nodes() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

void validate_model(const TreeModel& model) {
  if (model.nodes.empty()) {
    schema("model has no nodes");
  }
  if (!std::isfinite(model.base_score) || !std::isfinite(model.learning_rate)) {
    schema("non-finite base score or learning rate");
  }
  std::vector<char> seen(model.nodes.size(), 0);
  const std::function<void(int, int)> walk = [&](int i, int depth) {
    if (i < 0 || static_cast<std::size_t>(i) >= model.nodes.size() || seen[static_cast<std::size_t>(i)]) {
      schema("child index " + std::to_string(i) + " is invalid or shared");
    }
    seen[static_cast<std::size_t>(i)] = 1;
    const TreeNode& n = model.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      if (!std::isfinite(n.leaf)) {
        schema("non-finite leaf value");
      }
      return;
    }
    if (n.feature >= kNumFeatures) {
      throw Error(Errc::FeatureIndexOutOfRange, "feature index " + std::to_string(n.feature));
    }
    if (depth >= kMaxTreeDepth) {
      throw Error(Errc::DepthExceeded, "tree deeper than " + std::to_string(kMaxTreeDepth));
    }
    if (!std::isfinite(n.threshold)) {
      schema("non-finite threshold");
    }
    walk(n.left, depth + 1);
    walk(n.right, depth + 1);
  };
  walk(0, 0);
  if (std::count(seen.begin(), seen.end(), 0) != 0) {
    schema("unreachable nodes");
  }
}

TreeModel train_tree(std::span<const FeatureVector> x, std::span<const std::uint8_t> y, const TrainOptions& options) {
  if (options.max_depth < 0 || options.max_depth > kMaxTreeDepth) {
    throw Error(Errc::DepthExceeded, "max_depth must be at most " + std::to_string(kMaxTreeDepth));
  }
  return Trainer(x, y, options).run();
}

std::string export_model(const TreeModel& model) {
  validate_model(model);
  Json j;
  j["format"] = "efab-tree";
  j["version"] = 1;
  j["base_score"] = model.base_score;
  j["learning_rate"] = model.learning_rate;
  j["n_features"] = kNumFeatures;
  j["tree"] = node_to_json(model.nodes, 0);
  return j.dump(2) + "\n";
}

TreeModel import_model(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    schema(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", std::string()) != "efab-tree") {
    schema("missing \"format\": \"efab-tree\"");
  }
  if (!j.contains("version") || j.at("version") != 1) {
    schema("unsupported schema version");
  }
  if (j.contains("n_features") && j.at("n_features") != kNumFeatures) {
    schema("model expects " + j.at("n_features").dump() + " features, not " + std::to_string(kNumFeatures));
  }
  TreeModel m;
  m.base_score = number_field(j, "base_score");
  m.learning_rate = number_field(j, "learning_rate");
  if (!j.contains("tree")) {
    schema("missing 'tree'");
  }
  m.nodes.clear();
  node_from_json(j.at("tree"), 0, m.nodes);
  validate_model(m);
  return m;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::InvalidArgument, "logit needs a probability strictly between 0 and 1");
  }
  return std::log(p / (1.0 - p));
}

int find_leaf(const TreeModel& model, const FeatureVector& x) {
  int i = 0;
  while (!model.nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& n = model.nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

Prediction predict(const TreeModel& model, const FeatureVector& x) {
  const double s = model.base_score + model.learning_rate * model.nodes[static_cast<std::size_t>(find_leaf(model, x))].leaf;
  return {s, sigmoid(s)};
}

QuantTreeModel quantize(const TreeModel& model) {
  validate_model(model);
  QuantTreeModel q;
  q.base_score = Fixed28::quantize(model.base_score);
  for (const TreeNode& n : model.nodes) {
    QuantNode qn;
    qn.feature = n.feature;
    qn.left = n.left;
    qn.right = n.right;
    if (n.is_leaf()) {
      qn.leaf = Fixed28::quantize(model.learning_rate * n.leaf);
    } else {
      qn.threshold = Fixed28::quantize(n.threshold);
    }
    q.nodes.push_back(qn);
  }
  return q;
}

Fixed28 score_threshold(double tau) { return Fixed28::quantize(logit(tau)); }

QuantFeatures quantize_features(const FeatureVector& x) {
  QuantFeatures q;
  for (std::size_t i = 0; i < x.size(); ++i) {
    q[i] = Fixed28::saturate(x[i]);
  }
  return q;
}

QuantPrediction predict_quantized(const QuantTreeModel& model, const QuantFeatures& x) {
  int i = 0;
  while (!model.nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const QuantNode& n = model.nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  QuantPrediction p;
  p.leaf = i;
  p.score = sat_add(model.base_score, model.nodes[static_cast<std::size_t>(i)].leaf);
  p.probability = sigmoid(p.score.value());
  return p;
}

QuantPrediction predict_quantized(const QuantTreeModel& model, const FeatureVector& x) {
  return predict_quantized(model, quantize_features(x));
}

EvalReport evaluate_probabilities(std::span<const double> prob, std::span<const std::uint8_t> y, double threshold) {
  check_labels(y);
  if (prob.size() != y.size()) {
    throw Error(Errc::InvalidArgument, "prediction and label counts differ");
  }
  EvalReport r;
  r.threshold = threshold;
  std::size_t kept = 0;
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool background = prob[i] >= threshold;
    if (y[i]) {
      ++r.n_background;
      rejected += background;
    } else {
      ++r.n_signal;
      kept += !background;
    }
  }
  r.signal_efficiency = static_cast<double>(kept) / static_cast<double>(r.n_signal);
  r.background_rejection = static_cast<double>(rejected) / static_cast<double>(r.n_background);
  return r;
}

std::vector<double> predict_all(const TreeModel& model, std::span<const FeatureVector> x) {
  std::vector<double> p;
  p.reserve(x.size());
  for (const FeatureVector& v : x) {
    p.push_back(predict(model, v).probability);
  }
  return p;
}

std::vector<double> predict_all(const QuantTreeModel& model, std::span<const FeatureVector> x) {
  std::vector<double> p;
  p.reserve(x.size());
  for (const FeatureVector& v : x) {
    p.push_back(predict_quantized(model, v).probability);
  }
  return p;
}

EvalReport evaluate(const TreeModel& model, std::span<const FeatureVector> x, std::span<const std::uint8_t> y,
                    double threshold) {
  return evaluate_probabilities(predict_all(model, x), y, threshold);
}

EvalReport evaluate(const QuantTreeModel& model, std::span<const FeatureVector> x, std::span<const std::uint8_t> y,
                    double threshold) {
  return evaluate_probabilities(predict_all(model, x), y, threshold);
}

double roc_auc(std::span<const double> prob, std::span<const std::uint8_t> y) {
  check_labels(y);
  std::vector<std::size_t> idx(prob.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return prob[a] < prob[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && prob[idx[j]] == prob[idx[i]]) {
      ++j;
    }
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (y[idx[k]]) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(prob.size() - n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<EvalReport> threshold_sweep(std::span<const double> prob, std::span<const std::uint8_t> y, int points) {
  if (points < 2) {
    throw Error(Errc::InvalidArgument, "a sweep needs at least two points");
  }
  std::vector<EvalReport> out;
  for (int i = 0; i < points; ++i) {
    out.push_back(evaluate_probabilities(prob, y, static_cast<double>(i) / (points - 1)));
  }
  return out;
}

}  // namespace efab

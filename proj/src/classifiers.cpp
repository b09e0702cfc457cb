#include "etongue/classifiers.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "etongue/error.hpp"

namespace etongue {

namespace {

void check_labels(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw ArgumentError("label count does not match row count");
  }
  if (n_classes < 1) throw ArgumentError("n_classes must be >= 1");
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw ArgumentError("label index out of range");
  }
  if (!X.allFinite()) throw DataError("training matrix contains NaN or Inf");
}

int argmax_first(const Eigen::VectorXd& v) {
  int best = 0;
  for (int c = 1; c < v.size(); ++c) {
    if (v[c] > v[best]) best = c;
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// LDA

LDAModel lda_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes) {
  check_labels(X, labels, n_classes);
  if (n_classes < 2) throw InsufficientDataError("LDA needs at least two classes");
  const Eigen::Index m = X.cols();
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] < 2) {
      throw InsufficientDataError("LDA class " + std::to_string(c) + " has " +
                                  std::to_string(counts[static_cast<std::size_t>(c)]) +
                                  " rows, need >= 2");
    }
  }

  LDAModel model;
  model.class_means = Eigen::MatrixXd::Zero(n_classes, m);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    model.class_means.row(labels[i]) += X.row(static_cast<Eigen::Index>(i));
  }
  for (int c = 0; c < n_classes; ++c) {
    model.class_means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  }

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Eigen::VectorXd d =
        (X.row(static_cast<Eigen::Index>(i)) - model.class_means.row(labels[i])).transpose();
    scatter.noalias() += d * d.transpose();
  }
  const auto dof = static_cast<double>(static_cast<Eigen::Index>(labels.size()) - n_classes);
  Eigen::MatrixXd pooled = scatter / dof;
  const double ridge = kLdaRidgeFactor * pooled.trace() / static_cast<double>(m);
  pooled.diagonal().array() += ridge;

  Eigen::LLT<Eigen::MatrixXd> llt(pooled);
  if (llt.info() != Eigen::Success || !(ridge > 0.0)) {
    throw NumericalError("pooled covariance is singular after regularisation");
  }
  model.pooled_covariance_inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));
  if (!model.pooled_covariance_inverse.allFinite()) {
    throw NumericalError("pooled covariance inverse is not finite");
  }

  model.log_priors.resize(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    model.log_priors[c] = std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                                   static_cast<double>(labels.size()));
  }
  return model;
}

Eigen::VectorXd LDAModel::discriminants(const Eigen::VectorXd& x) const {
  if (x.size() != class_means.cols()) throw ArgumentError("LDA input width mismatch");
  Eigen::VectorXd out(n_classes());
  for (int c = 0; c < n_classes(); ++c) {
    const Eigen::VectorXd w = pooled_covariance_inverse * class_means.row(c).transpose();
    out[c] = x.dot(w) - 0.5 * class_means.row(c).dot(w) + log_priors[c];
  }
  return out;
}

int LDAModel::predict(const Eigen::VectorXd& x) const { return argmax_first(discriminants(x)); }

// ---------------------------------------------------------------------------
// KNN

KNNModel knn_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes, int k) {
  check_labels(X, labels, n_classes);
  if (k < 1 || k > X.rows()) {
    throw ArgumentError("k must satisfy 1 <= k <= n (k=" + std::to_string(k) +
                        ", n=" + std::to_string(X.rows()) + ")");
  }
  KNNModel model;
  model.k = k;
  model.training_scores = X;
  model.training_labels.assign(labels.begin(), labels.end());
  model.n_classes = n_classes;
  return model;
}

namespace {

std::vector<std::size_t> nearest_rows(const KNNModel& model, const Eigen::VectorXd& x) {
  const auto n = static_cast<std::size_t>(model.training_scores.rows());
  if (n == 0) throw StateError("KNN model has no training rows");
  if (x.size() != model.training_scores.cols()) throw ArgumentError("KNN input width mismatch");
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = (model.training_scores.row(static_cast<Eigen::Index>(i)).transpose() - x).squaredNorm();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(model.k), n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  order.resize(k);
  return order;
}

}  // namespace

Eigen::VectorXd KNNModel::votes(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_classes);
  for (std::size_t row : nearest_rows(*this, x)) v[training_labels[row]] += 1.0;
  return v;
}

int KNNModel::predict(const Eigen::VectorXd& x) const {
  const std::vector<std::size_t> nearest = nearest_rows(*this, x);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_classes);
  for (std::size_t row : nearest) v[training_labels[row]] += 1.0;
  const double top = v.maxCoeff();
  for (std::size_t row : nearest) {
    if (v[training_labels[row]] == top) return training_labels[row];
  }
  return training_labels[nearest.front()];
}

// ---------------------------------------------------------------------------
// CART

namespace {

// n * gini = n - sum(c^2) / n
double weighted_gini(const std::vector<int>& counts, int n) {
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (int c : counts) sq += static_cast<double>(c) * c;
  return static_cast<double>(n) - sq / n;
}

}  // namespace

DecisionTree fit_tree(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                      std::span<const std::size_t> rows) {
  if (rows.empty()) throw InsufficientDataError("tree needs at least one row");
  DecisionTree tree;
  struct Pending {
    int node;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::vector<std::size_t>(rows.begin(), rows.end())});

  const Eigen::Index m = X.cols();
  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    const int n = static_cast<int>(job.rows.size());
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t r : job.rows) ++counts[static_cast<std::size_t>(labels[r])];
    const double parent = weighted_gini(counts, n);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent;
    if (parent > 0.0) {
      std::vector<std::size_t> sorted = job.rows;
      for (Eigen::Index f = 0; f < m; ++f) {
        std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
          return X(static_cast<Eigen::Index>(a), f) < X(static_cast<Eigen::Index>(b), f);
        });
        std::vector<int> left(static_cast<std::size_t>(n_classes), 0);
        std::vector<int> right = counts;
        for (int i = 0; i + 1 < n; ++i) {
          const int y = labels[sorted[static_cast<std::size_t>(i)]];
          ++left[static_cast<std::size_t>(y)];
          --right[static_cast<std::size_t>(y)];
          const double lo = X(static_cast<Eigen::Index>(sorted[static_cast<std::size_t>(i)]), f);
          const double hi = X(static_cast<Eigen::Index>(sorted[static_cast<std::size_t>(i) + 1]), f);
          if (!(lo < hi)) continue;
          const double impurity = weighted_gini(left, i + 1) + weighted_gini(right, n - i - 1);
          if (impurity < best_impurity - 1e-12) {
            best_impurity = impurity;
            best_feature = static_cast<int>(f);
            double mid = lo + 0.5 * (hi - lo);
            if (!(mid < hi)) mid = lo;
            best_threshold = mid;
          }
        }
      }
    }

    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(job.node)].class_counts = std::move(counts);
      continue;
    }
    Pending left_job{static_cast<int>(tree.nodes.size()), {}};
    Pending right_job{static_cast<int>(tree.nodes.size() + 1), {}};
    for (std::size_t r : job.rows) {
      (X(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left_job : right_job)
          .rows.push_back(r);
    }
    TreeNode& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_job.node;
    node.right = right_job.node;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    stack.push_back(std::move(right_job));
    stack.push_back(std::move(left_job));
  }
  return tree;
}

int DecisionTree::predict(const Eigen::VectorXd& x) const {
  if (nodes.empty()) throw StateError("empty decision tree");
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    if (node.feature >= x.size()) throw ArgumentError("tree input width mismatch");
    i = static_cast<std::size_t>(x[node.feature] <= node.threshold ? node.left : node.right);
  }
  const auto& counts = nodes[i].class_counts;
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, int tree_index, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tree_index), 0xB00Fu};
  std::mt19937_64 engine(seq);
  std::vector<std::size_t> out(n);
  for (auto& idx : out) idx = static_cast<std::size_t>(engine() % n);
  return out;
}

BaggedTreesModel bagged_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                            int n_trees, std::uint64_t seed, int n_threads) {
  check_labels(X, labels, n_classes);
  if (X.rows() < 2) throw InsufficientDataError("bagged trees need at least two rows");
  if (n_trees < 1) throw ArgumentError("n_trees must be >= 1");

  BaggedTreesModel model;
  model.n_trees = n_trees;
  model.bootstrap_seed = seed;
  model.n_classes = n_classes;
  model.trees.resize(static_cast<std::size_t>(n_trees));
  const auto n = static_cast<std::size_t>(X.rows());
  auto train = [&](int t) {
    const auto rows = bootstrap_indices(seed, t, n);
    model.trees[static_cast<std::size_t>(t)] = fit_tree(X, labels, n_classes, rows);
  };

  const int workers = std::clamp(n_threads, 1, n_trees);
  if (workers == 1) {
    for (int t = 0; t < n_trees; ++t) train(t);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int t = w; t < n_trees; t += workers) train(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

Eigen::VectorXd BaggedTreesModel::votes(const Eigen::VectorXd& x) const {
  if (trees.empty()) throw StateError("bagged model has no trees");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_classes);
  for (const auto& tree : trees) v[tree.predict(x)] += 1.0;
  return v;
}

int BaggedTreesModel::predict(const Eigen::VectorXd& x) const { return argmax_first(votes(x)); }

// ---------------------------------------------------------------------------
// Baseline

BaselineModel baseline_fit(std::span<const int> labels, int n_classes) {
  if (labels.empty()) throw InsufficientDataError("baseline needs at least one label");
  BaselineModel model;
  model.class_probabilities = Eigen::VectorXd::Zero(n_classes);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw ArgumentError("label index out of range");
    model.class_probabilities[y] += 1.0;
  }
  model.class_probabilities /= static_cast<double>(labels.size());
  return model;
}

int BaselineModel::predict(std::mt19937_64& rng) const {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  int last_positive = 0;
  for (int c = 0; c < class_probabilities.size(); ++c) {
    if (class_probabilities[c] <= 0.0) continue;
    last_positive = c;
    cumulative += class_probabilities[c];
    if (u < cumulative) return c;
  }
  return last_positive;
}

double baseline_expected_accuracy(const BaselineModel& model,
                                  const Eigen::VectorXd& test_label_frequencies) {
  if (test_label_frequencies.size() != model.class_probabilities.size()) {
    throw ArgumentError("class count mismatch");
  }
  return model.class_probabilities.dot(test_label_frequencies);
}

}  // namespace etongue

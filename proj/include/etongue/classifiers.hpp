#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

// Classifiers work on dense class indices 0..n_classes-1; the pipeline owns
// the mapping to label strings. Ties are always resolved towards the lowest
// class index unless stated otherwise.
namespace etongue {

// ---------------------------------------------------------------------------
// Linear discriminant analysis
// ---------------------------------------------------------------------------

struct LDAModel {
  Eigen::MatrixXd class_means;                // C x m
  Eigen::MatrixXd pooled_covariance_inverse;  // m x m
  Eigen::VectorXd log_priors;                 // C

  int n_classes() const { return static_cast<int>(class_means.rows()); }
  // delta_c(x) = x' S^-1 mu_c - 0.5 mu_c' S^-1 mu_c + ln pi_c
  Eigen::VectorXd discriminants(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;
};

// Pooled within-class covariance (divisor n - C) plus a ridge of
// 1e-6 * trace / m on the diagonal. Priors are the training class
// frequencies. Throws InsufficientDataError when fewer than two classes are
// given or a class has fewer than two rows, NumericalError when the
// regularised covariance is still not positive definite.
LDAModel lda_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes);

inline constexpr double kLdaRidgeFactor = 1e-6;

// ---------------------------------------------------------------------------
// k nearest neighbours
// ---------------------------------------------------------------------------

struct KNNModel {
  int k = 3;
  Eigen::MatrixXd training_scores;  // n x m
  std::vector<int> training_labels;
  int n_classes = 0;

  // Vote count per class among the k nearest rows.
  Eigen::VectorXd votes(const Eigen::VectorXd& x) const;
  // Majority vote over the k Euclidean-nearest rows. Equal distances are
  // ordered by training row index. A vote tie goes to the tied class whose
  // member is nearest (for a full tie that is the single nearest neighbour).
  int predict(const Eigen::VectorXd& x) const;
};

// Throws ArgumentError unless 1 <= k <= n.
KNNModel knn_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes, int k = 3);

// ---------------------------------------------------------------------------
// Bagged CART trees
// ---------------------------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<int> class_counts;  // leaves only

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int predict(const Eigen::VectorXd& x) const;
};

// Gini CART grown until every leaf is pure or no split lowers the impurity.
// Candidate thresholds are midpoints between consecutive distinct values;
// the first best split (feature order, then threshold order) wins.
DecisionTree fit_tree(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                      std::span<const std::size_t> rows);

// Bootstrap sample (size n, with replacement) for one tree; depends only on
// (seed, tree_index, n).
std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, int tree_index, std::size_t n);

struct BaggedTreesModel {
  int n_trees = 50;
  std::uint64_t bootstrap_seed = 0;
  int n_classes = 0;
  std::vector<DecisionTree> trees;

  Eigen::VectorXd votes(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;
};

// No feature subsampling and no depth limit. Trees may be trained on
// `n_threads` threads; the forest is identical for any thread count.
BaggedTreesModel bagged_fit(const Eigen::MatrixXd& X, std::span<const int> labels, int n_classes,
                            int n_trees = 50, std::uint64_t seed = 0, int n_threads = 1);

// ---------------------------------------------------------------------------
// Weighted random baseline
// ---------------------------------------------------------------------------

struct BaselineModel {
  Eigen::VectorXd class_probabilities;  // training class frequencies, sums to 1

  int predict(std::mt19937_64& rng) const;
};

// Throws InsufficientDataError on empty labels.
BaselineModel baseline_fit(std::span<const int> labels, int n_classes);
// sum_c p_c * q_c, with q the test-set class frequencies.
double baseline_expected_accuracy(const BaselineModel& model,
                                  const Eigen::VectorXd& test_label_frequencies);

}  // namespace etongue

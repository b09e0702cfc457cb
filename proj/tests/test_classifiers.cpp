#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "etongue/classifiers.hpp"
#include "etongue/error.hpp"
#include "support/fixtures.hpp"

using namespace etongue;

namespace {

// Exhaustive scan: full sort of (distance, row) pairs, majority vote, vote tie
// resolved by the tied class that owns the nearest of the k neighbours.
int knn_oracle(const Eigen::MatrixXd& X, const std::vector<int>& y, int n_classes, int k,
               const Eigen::VectorXd& x) {
  std::vector<std::pair<double, int>> d;
  for (int i = 0; i < X.rows(); ++i) {
    double s = 0.0;
    for (int j = 0; j < X.cols(); ++j) s += (X(i, j) - x[j]) * (X(i, j) - x[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
  for (int i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(y[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)])];
  const int top = *std::max_element(votes.begin(), votes.end());
  for (int i = 0; i < k; ++i) {
    const int label = y[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)];
    if (votes[static_cast<std::size_t>(label)] == top) return label;
  }
  return -1;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

}  // namespace

TEST_CASE("LDA: two 1-D classes around -1 and +1") {
  Eigen::MatrixXd X(6, 1);
  X << -1.5, -1.0, -0.5, 0.5, 1.0, 1.5;
  const std::vector<int> y = {0, 0, 0, 1, 1, 1};
  const LDAModel m = lda_fit(X, y, 2);
  CHECK(m.predict(vec({0.9})) == 1);
  CHECK(m.predict(vec({-0.9})) == 0);
  // Symmetric problem: x = 0 is exactly on the boundary, tie goes to class 0.
  const Eigen::VectorXd d = m.discriminants(vec({0.0}));
  CHECK(d[0] == d[1]);
  CHECK(m.predict(vec({0.0})) == 0);
  CHECK(m.log_priors.array().exp().sum() == doctest::Approx(1.0));
}

TEST_CASE("LDA boundary matches the hand-computed discriminant") {
  // Class 0: {0, 1, 2} (mean 1), class 1: {4, 6} (mean 5).
  Eigen::MatrixXd X(5, 1);
  X << 0, 1, 2, 4, 6;
  const std::vector<int> y = {0, 0, 0, 1, 1};
  const LDAModel m = lda_fit(X, y, 2);

  // Pooled within-class variance, divisor n - C = 3: (1 + 0 + 1 + 1 + 1) / 3.
  const double s2 = 4.0 / 3.0;
  const double ridge = 1e-6 * s2;
  const double var = s2 + ridge;
  const double mu0 = 1.0, mu1 = 5.0;
  const double pi0 = 3.0 / 5.0, pi1 = 2.0 / 5.0;
  // d1 - d0 = x (mu1 - mu0)/var - (mu1^2 - mu0^2)/(2 var) + ln(pi1/pi0) = 0
  const double boundary = (mu1 * mu1 - mu0 * mu0) / (2.0 * (mu1 - mu0)) -
                          var * std::log(pi1 / pi0) / (mu1 - mu0);

  const Eigen::VectorXd d0 = m.discriminants(vec({0.0}));
  const Eigen::VectorXd d1 = m.discriminants(vec({1.0}));
  const double slope = (d1[1] - d1[0]) - (d0[1] - d0[0]);
  const double model_boundary = -(d0[1] - d0[0]) / slope;
  CHECK(std::abs(model_boundary - boundary) < 1e-8);
  CHECK(m.predict(vec({boundary - 1e-6})) == 0);
  CHECK(m.predict(vec({boundary + 1e-6})) == 1);
}

TEST_CASE("LDA separates blobs 10 sigma apart perfectly on training data") {
  Eigen::MatrixXd X;
  std::vector<int> y;
  etongue::testing::gaussian_blobs(2, 50, 3, 10.0, 5, X, y);
  const LDAModel m = lda_fit(X, y, 2);
  for (int i = 0; i < X.rows(); ++i) CHECK(m.predict(X.row(i).transpose()) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("LDA decisions are invariant under a joint affine map") {
  Eigen::MatrixXd X;
  std::vector<int> y;
  etongue::testing::gaussian_blobs(4, 20, 3, 2.0, 8, X, y);
  Eigen::Matrix3d A;
  A << 2.0, 0.3, 0.0, -0.5, 1.5, 0.2, 0.1, 0.0, 0.7;
  const Eigen::Vector3d shift(10.0, -4.0, 2.5);
  const Eigen::MatrixXd Y = (X * A.transpose()).rowwise() + shift.transpose();
  const LDAModel a = lda_fit(X, y, 4);
  const LDAModel b = lda_fit(Y, y, 4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Vector3d x(normal(rng), normal(rng), normal(rng));
    const Eigen::VectorXd da = a.discriminants(x);
    const Eigen::VectorXd db = b.discriminants(A * x + shift);
    // Only differences between discriminants decide the argmax; the ridge term
    // is not affine-equivariant, so values agree to ~1e-4 but the ordering is exact.
    for (int c = 0; c < 4; ++c) {
      for (int e = c + 1; e < 4; ++e) {
        if (std::abs(da[c] - da[e]) > 1e-8) CHECK((da[c] < da[e]) == (db[c] < db[e]));
        CHECK((db[e] - db[c]) == doctest::Approx(da[e] - da[c]).epsilon(1e-4).scale(1.0));
      }
    }
    CHECK(a.predict(x) == b.predict(A * x + shift));
  }
}

TEST_CASE("LDA error paths") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  const std::vector<int> y = {0, 0, 1};
  CHECK_THROWS_AS(lda_fit(X, y, 2), InsufficientDataError);
  const std::vector<int> one = {0, 0, 0};
  CHECK_THROWS_AS(lda_fit(X, one, 1), InsufficientDataError);
  const std::vector<int> bad = {0, 3, 1};
  CHECK_THROWS_AS(lda_fit(X, bad, 2), ArgumentError);
}

TEST_CASE("KNN basic rules") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 1.0, 1.2, 5.0;
  const std::vector<int> y = {0, 1, 1, 2};
  CHECK(knn_fit(X, y, 3, 1).predict(vec({5.0})) == 2);
  CHECK(knn_fit(X, y, 3, 3).predict(vec({0.1})) == 1);  // neighbours (A, B, B)

  // Three-way vote tie with distinct distances: nearest wins.
  Eigen::MatrixXd Z(3, 1);
  Z << 2.0, -1.0, 4.0;
  const std::vector<int> z = {0, 1, 2};
  CHECK(knn_fit(Z, z, 3, 3).predict(vec({0.0})) == 1);
  // Distance tie: the lower training row index is the nearer neighbour.
  Eigen::MatrixXd W(2, 1);
  W << -1.0, 1.0;
  const std::vector<int> w = {1, 0};
  CHECK(knn_fit(W, w, 2, 1).predict(vec({0.0})) == 1);
  CHECK(knn_fit(W, w, 2, 2).predict(vec({0.0})) == 1);

  CHECK_THROWS_AS(knn_fit(X, y, 3, 5), ArgumentError);
  CHECK_THROWS_AS(knn_fit(X, y, 3, 0), ArgumentError);
  KNNModel empty;
  CHECK_THROWS_AS(empty.predict(vec({0.0})), StateError);
}

TEST_CASE("KNN equals an exhaustive scan on 200 random cases for k = 1, 3, 5") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> coord(-3, 3);  // integer grid: many distance ties
  std::uniform_int_distribution<int> size(6, 30);
  for (int k : {1, 3, 5}) {
    int mismatches = 0;
    for (int t = 0; t < 200; ++t) {
      const int n = size(rng);
      const int dims = 1 + t % 3;
      const int classes = 2 + t % 4;
      Eigen::MatrixXd X(n, dims);
      std::vector<int> y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dims; ++d) X(i, d) = coord(rng);
        y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
      }
      Eigen::VectorXd x(dims);
      for (int d = 0; d < dims; ++d) x[d] = coord(rng) + 0.5 * (t % 2);
      const KNNModel model = knn_fit(X, y, classes, k);
      if (model.predict(x) != knn_oracle(X, y, classes, k, x)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("CART splits inside the margin and fits its bootstrap sample") {
  Eigen::MatrixXd X(8, 1);
  X << -4, -3, -2, -0.5, 0.5, 2, 3, 4;
  const std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  std::vector<std::size_t> rows(8);
  std::iota(rows.begin(), rows.end(), 0);
  const DecisionTree tree = fit_tree(X, y, 2, rows);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].threshold == 0.0);
  CHECK(tree.predict(vec({-0.49})) == 0);
  CHECK(tree.predict(vec({0.49})) == 1);

  Eigen::MatrixXd B;
  std::vector<int> labels;
  etongue::testing::gaussian_blobs(3, 15, 2, 1.0, 2, B, labels);
  const auto boot = bootstrap_indices(7, 0, 45);
  const DecisionTree t2 = fit_tree(B, labels, 3, boot);
  for (std::size_t r : boot) CHECK(t2.predict(B.row(static_cast<Eigen::Index>(r)).transpose()) == labels[r]);
  for (const auto& node : t2.nodes) {
    if (node.is_leaf()) {
      CHECK(std::accumulate(node.class_counts.begin(), node.class_counts.end(), 0) >= 1);
    } else {
      CHECK(node.left > 0);
      CHECK(node.right > 0);
    }
  }
}

TEST_CASE("bagged trees: margin accuracy, single class, determinism") {
  Eigen::MatrixXd X(40, 1);
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = i < 20 ? -1.0 - 0.1 * i : 1.0 + 0.1 * (i - 20);
    y.push_back(i < 20 ? 0 : 1);
  }
  const BaggedTreesModel m = bagged_fit(X, y, 2, 50, 9);
  CHECK(m.trees.size() == 50);
  for (int i = 0; i < 40; ++i) CHECK(m.predict(X.row(i).transpose()) == y[static_cast<std::size_t>(i)]);
  CHECK(m.predict(vec({-1.0})) == 0);
  CHECK(m.predict(vec({1.0})) == 1);

  const std::vector<int> same(40, 1);
  const BaggedTreesModel s = bagged_fit(X, same, 3, 10, 1);
  CHECK(s.predict(vec({0.0})) == 1);
  CHECK(s.predict(vec({-7.0})) == 1);

  Eigen::MatrixXd B;
  std::vector<int> labels;
  etongue::testing::gaussian_blobs(4, 20, 3, 1.5, 6, B, labels);
  const BaggedTreesModel serial = bagged_fit(B, labels, 4, 50, 77, 1);
  const BaggedTreesModel again = bagged_fit(B, labels, 4, 50, 77, 1);
  const BaggedTreesModel parallel = bagged_fit(B, labels, 4, 50, 77, 4);
  auto same_forest = [](const BaggedTreesModel& a, const BaggedTreesModel& b) {
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
      const auto& na = a.trees[t].nodes;
      const auto& nb = b.trees[t].nodes;
      if (na.size() != nb.size()) return false;
      for (std::size_t i = 0; i < na.size(); ++i) {
        if (na[i].feature != nb[i].feature || na[i].threshold != nb[i].threshold ||
            na[i].left != nb[i].left || na[i].right != nb[i].right ||
            na[i].class_counts != nb[i].class_counts) {
          return false;
        }
      }
    }
    return true;
  };
  CHECK(same_forest(serial, again));
  CHECK(same_forest(serial, parallel));
  const BaggedTreesModel other = bagged_fit(B, labels, 4, 50, 78, 1);
  CHECK_FALSE(same_forest(serial, other));
}

TEST_CASE("bagged vote tie goes to the lowest class index") {
  BaggedTreesModel m;
  m.n_classes = 2;
  m.n_trees = 2;
  DecisionTree a, b;
  a.nodes.push_back({-1, 0.0, -1, -1, {0, 1}});
  b.nodes.push_back({-1, 0.0, -1, -1, {1, 0}});
  m.trees = {a, b};
  CHECK(m.predict(vec({0.0})) == 0);
}

TEST_CASE("baseline expected accuracy") {
  const std::vector<int> eleven = [] {
    std::vector<int> v;
    for (int c = 0; c < 11; ++c) v.insert(v.end(), 3, c);
    return v;
  }();
  const BaselineModel m11 = baseline_fit(eleven, 11);
  CHECK(baseline_expected_accuracy(m11, Eigen::VectorXd::Constant(11, 1.0 / 11)) ==
        doctest::Approx(1.0 / 11.0));
  CHECK(1.0 / 11.0 == doctest::Approx(0.091).epsilon(0.01));

  const std::vector<int> two = {0, 1, 0, 1};
  CHECK(baseline_expected_accuracy(baseline_fit(two, 2), Eigen::VectorXd::Constant(2, 0.5)) ==
        doctest::Approx(0.5));
  const std::vector<int> one = {0, 0, 0};
  CHECK(baseline_expected_accuracy(baseline_fit(one, 1), Eigen::VectorXd::Ones(1)) == 1.0);
  CHECK(baseline_fit(two, 2).class_probabilities.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(baseline_fit(std::vector<int>{}, 2), InsufficientDataError);
}

TEST_CASE("baseline Monte-Carlo accuracy converges to the analytic value") {
  const std::vector<int> train = {0, 0, 0, 0, 0, 1, 1, 1, 2, 2};  // p = (0.5, 0.3, 0.2)
  const BaselineModel m = baseline_fit(train, 3);
  const std::vector<int> test = {0, 1, 1, 2, 2, 2, 2, 2};       // q = (1/8, 2/8, 5/8)
  Eigen::VectorXd q(3);
  q << 1.0 / 8, 2.0 / 8, 5.0 / 8;
  const double expected = baseline_expected_accuracy(m, q);
  CHECK(expected == doctest::Approx(0.5 / 8 + 0.6 / 8 + 1.0 / 8));

  std::mt19937_64 rng(2024);
  const int draws = 100000;
  int hits = 0;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < draws; ++i) {
    const int p = m.predict(rng);
    ++counts[static_cast<std::size_t>(p)];
    hits += p == test[static_cast<std::size_t>(i) % test.size()];
  }
  const double acc = static_cast<double>(hits) / draws;
  const double se = std::sqrt(expected * (1.0 - expected) / draws);
  CHECK(std::abs(acc - expected) < 3.0 * se);
  CHECK(std::abs(counts[0] / double(draws) - 0.5) < 0.01);
}

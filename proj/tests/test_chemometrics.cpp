#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>
#include <numeric>
#include <random>

#include "etongue/chemometrics.hpp"
#include "etongue/error.hpp"
#include "etongue/features.hpp"
#include "support/fixtures.hpp"

using namespace etongue;
using etongue::testing::profile;

namespace {

Eigen::MatrixXd random_orthonormal(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

Eigen::MatrixXd gaussian(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = normal(rng);
  return A;
}

// Largest principal angle between the column spaces of two orthonormal bases.
double subspace_angle(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  // The sine form keeps precision for tiny angles, where acos of the cosines does not.
  const Eigen::MatrixXd residual = B - A * (A.transpose() * B);
  const double sine = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0);
  return std::asin(std::min(1.0, sine));
}

// Population covariance, computed independently of the library.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& X) {
  const Eigen::RowVectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd C = X.rowwise() - mean;
  return C.transpose() * C / static_cast<double>(X.rows());
}

}  // namespace

TEST_CASE("line fit: exact line and constant feature") {
  Eigen::VectorXd x(5), y(5);
  x << -5, -4, -3, -2, -1;
  y << 1, 2, 3, 4, 5;
  LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-14));
  f = fit_line(x, Eigen::VectorXd::Constant(5, 3.0));
  CHECK(f.slope == 0.0);
  CHECK(f.r_squared == 0.0);
}

TEST_CASE("sensitivity slopes per acid and feature") {
  std::map<std::string, std::vector<ConcentrationPoint>> points;
  for (int l = -5; l <= -1; ++l) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kFeatureCount);
    v[0] = l + 6;        // slope 1
    v[1] = 7.0;          // constant
    v[2] = -2.0 * l;     // slope -2
    points["acetic"].push_back({double(l), v});
    points["citric"].push_back({double(l), 3.0 * v});
  }
  const SensitivityReport r = sensitivity_slopes(points);
  REQUIRE(r.acids == std::vector<std::string>{"acetic", "citric"});
  CHECK(r.slopes.rows() == kFeatureCount);
  CHECK(r.slopes(0, 0) == doctest::Approx(1.0));
  CHECK(r.r_squared(0, 0) == doctest::Approx(1.0));
  CHECK(r.slopes(1, 0) == 0.0);
  CHECK(r.r_squared(1, 0) == 0.0);
  CHECK(r.slopes(2, 0) == doctest::Approx(-2.0));
  CHECK(r.slopes(0, 1) == doctest::Approx(3.0));
  CHECK((r.r_squared.array() >= 0.0).all());
  CHECK((r.r_squared.array() <= 1.0).all());
}

TEST_CASE("sensitivity slopes need three distinct concentrations") {
  std::map<std::string, std::vector<ConcentrationPoint>> points;
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(kFeatureCount);
  points["acetic"] = {{-3.0, v}, {-3.0, v}, {-2.0, v}, {-2.0, v}};
  CHECK_THROWS_AS(sensitivity_slopes(points), InsufficientDataError);
  CHECK_THROWS_AS(sensitivity_slopes({}), InsufficientDataError);
}

TEST_CASE("simulated 2.5 mV/decade sensitivity is recovered from F0") {
  SensorArraySpec array = etongue::testing::single_channel_array(2.5, 5.0);
  array.noise_sigma_mv = 0.05;
  const auto ref = profile("ref", {{"a", 1e-3}});
  std::map<std::string, std::vector<ConcentrationPoint>> points;
  std::uint64_t seed = 100;
  for (int l = -5; l <= -1; ++l) {
    const auto test = profile("t", {{"a", std::pow(10.0, l)}});
    for (int r = 0; r < 3; ++r) {
      points["a"].push_back({double(l), extract_features(simulate_transient(array, ref, test, {}, seed++)).values});
    }
  }
  const SensitivityReport rep = sensitivity_slopes(points);
  CHECK(std::abs(rep.slopes(0, 0) - 2.5) < 0.1);
  CHECK(rep.r_squared(0, 0) > 0.99);
}

TEST_CASE("standardizer: population std and zero-variance guard") {
  Eigen::MatrixXd X(2, 2);
  X << 2, 5, 4, 5;
  const Standardizer s = fit_standardizer(X);
  CHECK(s.means[0] == 3.0);
  CHECK(s.stds[0] == 1.0);  // population std of (2, 4)
  CHECK(s.stds[1] == 1.0);  // guarded
  CHECK(s.constant[1]);
  const Eigen::MatrixXd Z = s.apply(X);
  CHECK(Z(0, 0) == -1.0);
  CHECK(Z(1, 0) == 1.0);
  CHECK(Z.col(1).isZero());
  // New data in a constant column still maps to zero.
  Eigen::VectorXd x(2);
  x << 3.0, 9.0;
  CHECK(s.apply(x)[1] == 0.0);
  CHECK_THROWS_AS(fit_standardizer(Eigen::MatrixXd::Ones(1, 3)), InsufficientDataError);
}

TEST_CASE("standardized fitting data has zero mean and unit std") {
  Eigen::MatrixXd X = gaussian(50, 10, 3);
  X.col(2) *= 1e3;
  X.col(3).array() += 500.0;
  const Eigen::MatrixXd Z = fit_standardizer(X).apply(X);
  for (int j = 0; j < Z.cols(); ++j) {
    CHECK(std::abs(Z.col(j).mean()) < 1e-12);
    CHECK(std::sqrt(Z.col(j).squaredNorm() / Z.rows()) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("Jacobi eigen-solver agrees with Eigen's self-adjoint solver") {
  const Eigen::MatrixXd A = gaussian(30, 12, 5);
  const Eigen::MatrixXd C = covariance(A);
  const SymmetricEigen mine = symmetric_eigen(C);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(C);
  const Eigen::VectorXd expected = ref.eigenvalues().reverse();
  CHECK((mine.values - expected).cwiseAbs().maxCoeff() < 1e-10);
  for (int i = 1; i < mine.values.size(); ++i) CHECK(mine.values[i - 1] >= mine.values[i]);
  CHECK((mine.vectors.transpose() * mine.vectors - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((C * mine.vectors - mine.vectors * mine.values.asDiagonal()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("PCA on two distinct points: one component explains everything") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(2, kFeatureCount);
  X.row(1) = gaussian(1, kFeatureCount, 9);
  const PCAModel pca = fit_pca(X);
  CHECK(pca.n_selected() == 1);
  CHECK(pca.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("PCA on an isotropic 3-D sample embedded in 75-D selects 3 components") {
  const Eigen::MatrixXd Q = random_orthonormal(kFeatureCount, 3, 1);
  const Eigen::MatrixXd X = gaussian(10000, 3, 2) * Q.transpose();
  const PCAModel pca = fit_pca(X, {0.95, 0});
  REQUIRE(pca.n_selected() == 3);
  CHECK(pca.cumulative_ratio(3) >= 0.95);
  CHECK(pca.cumulative_ratio(2) < 0.95);
  CHECK(std::abs(pca.full_variance_ratio.sum() - 1.0) < 1e-9);

  // Oracle: direct eigen-solve of the covariance.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(covariance(X));
  const Eigen::MatrixXd top = ref.eigenvectors().rightCols(3);
  CHECK(subspace_angle(top, pca.components) < 1e-6);
  CHECK(subspace_angle(Q, pca.components) < 1e-6);
}

TEST_CASE("PCA model invariants") {
  Eigen::MatrixXd X = gaussian(40, kFeatureCount, 7);
  X.leftCols(5) += 4.0 * gaussian(40, 1, 8).replicate(1, 5);
  const PCAModel pca = fit_pca(X);
  const int m = pca.n_selected();
  CHECK((pca.components.transpose() * pca.components - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-8);
  for (int i = 1; i < m; ++i) CHECK(pca.explained_variance_ratio[i] <= pca.explained_variance_ratio[i - 1]);
  CHECK(pca.explained_variance_ratio.sum() <= 1.0 + 1e-12);
  CHECK(pca.cumulative_ratio(m) >= 0.95);
  CHECK(pca.cumulative_ratio(m - 1) < 0.95);
  CHECK(std::abs(pca.full_variance_ratio.sum() - 1.0) < 1e-9);
  for (int c = 0; c < m; ++c) {
    Eigen::Index arg = 0;
    pca.components.col(c).cwiseAbs().maxCoeff(&arg);
    CHECK(pca.components(arg, c) > 0.0);
  }
}

TEST_CASE("PCA scores do not depend on row order") {
  Eigen::MatrixXd X = gaussian(30, 8, 11);
  X.col(0) *= 5.0;
  X.col(1) *= 3.0;
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  Eigen::MatrixXd Y(30, 8);
  for (int i = 0; i < 30; ++i) Y.row(i) = X.row(perm[i]);
  const PCAModel a = fit_pca(X);
  const PCAModel b = fit_pca(Y);
  REQUIRE(a.n_selected() == b.n_selected());
  const Eigen::MatrixXd sa = project(a, X);
  const Eigen::MatrixXd sb = project(b, X);
  CHECK((sa - sb).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("reconstruction error is non-increasing in the number of components") {
  const Eigen::MatrixXd X = gaussian(25, 12, 13) * gaussian(12, 12, 14);
  double previous = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= 12; ++m) {
    const PCAModel pca = fit_pca(X, {0.95, m});
    REQUIRE(pca.n_selected() == m);
    const double err = (reconstruct(pca, project(pca, X)) - X).squaredNorm();
    CHECK(err <= previous + 1e-9);
    previous = err;
  }
  CHECK(previous < 1e-12 * X.squaredNorm());
}

TEST_CASE("PCA error paths") {
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Zero(5, 4)), NumericalError);
  CHECK_THROWS_AS(fit_pca(Eigen::MatrixXd::Ones(1, 4)), InsufficientDataError);
  CHECK_THROWS_AS(fit_pca(gaussian(5, 4, 1), {1.5, 0}), ArgumentError);
  CHECK_THROWS_AS(fit_pca(gaussian(5, 4, 1), {0.0, 0}), ArgumentError);
  const PCAModel pca = fit_pca(gaussian(5, 4, 1));
  CHECK_THROWS_AS(project(pca, Eigen::MatrixXd(Eigen::MatrixXd::Zero(2, 3))), ArgumentError);
}

#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace etongue {

// ---------------------------------------------------------------------------
// Sensitivity slopes
// ---------------------------------------------------------------------------

struct ConcentrationPoint {
  double log10_concentration = 0.0;
  Eigen::VectorXd features;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;  // 0 when y is constant
};

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct SensitivityReport {
  std::vector<std::string> acids;  // column order
  Eigen::MatrixXd slopes;          // n_features x n_acids, feature units per decade
  Eigen::MatrixXd r_squared;       // n_features x n_acids, in [0, 1]
};

// Ordinary least-squares slope of every feature against log10(c), one column
// per acid. Repeats at the same concentration are regressed as separate
// points. Throws InsufficientDataError when an acid has fewer than three
// distinct concentrations.
SensitivityReport sensitivity_slopes(
    const std::map<std::string, std::vector<ConcentrationPoint>>& points_by_acid);

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

// Columns with a standard deviation below this are treated as constant.
inline constexpr double kMinStandardDeviation = 1e-12;

// z-scoring with the population standard deviation (divide by n). Constant
// columns keep std = 1 and always standardize to exactly 0.
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  std::vector<bool> constant;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

// Throws InsufficientDataError with fewer than two rows.
Standardizer fit_standardizer(const Eigen::MatrixXd& X);

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct SymmetricEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

// Cyclic Jacobi rotations; stops when the off-diagonal Frobenius norm falls
// below tolerance * ||A||_F. Eigenpairs are sorted by descending eigenvalue,
// ties keep the diagonal position they converged to. Throws NumericalError
// if it does not converge.
SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A, double tolerance = 1e-10);

struct PCAModel {
  Eigen::VectorXd mean;                      // p, subtracted before projection
  Eigen::MatrixXd components;                // p x m, orthonormal columns
  Eigen::VectorXd explained_variance;        // m eigenvalues
  Eigen::VectorXd explained_variance_ratio;  // m
  Eigen::VectorXd full_variance_ratio;       // p, sums to 1

  int n_selected() const { return static_cast<int>(components.cols()); }
  double cumulative_ratio(int m) const;
};

struct PcaOptions {
  double variance_target = 0.95;
  // When > 0, keep exactly this many components instead of using the target.
  int n_components = 0;
};

// Eigen-decomposition of the (population) covariance of X. Keeps the smallest
// m whose cumulative explained-variance ratio reaches the target. Each
// component is signed so its largest-magnitude loading is positive.
// Throws InsufficientDataError for n < 2 and NumericalError when X has no
// variance at all.
PCAModel fit_pca(const Eigen::MatrixXd& X, const PcaOptions& options = {});

Eigen::MatrixXd project(const PCAModel& pca, const Eigen::MatrixXd& X);
Eigen::VectorXd project(const PCAModel& pca, const Eigen::VectorXd& x);
Eigen::MatrixXd reconstruct(const PCAModel& pca, const Eigen::MatrixXd& scores);

}  // namespace etongue

#include "etongue/chemometrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "etongue/error.hpp"

namespace etongue {

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InsufficientDataError("line fit needs at least two paired points");
  }
  const double x_mean = x.mean();
  const double y_mean = y.mean();
  const Eigen::ArrayXd dx = x.array() - x_mean;
  const Eigen::ArrayXd dy = y.array() - y_mean;
  const double sxx = (dx * dx).sum();
  const double sxy = (dx * dy).sum();
  const double syy = (dy * dy).sum();
  if (!(sxx > 0.0)) throw InsufficientDataError("line fit needs distinct x values");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  // A constant response carries no linear trend: report R^2 = 0, slope 0.
  const double y_scale = std::max(std::abs(y_mean), 1.0);
  if (std::sqrt(syy / static_cast<double>(y.size())) <= 1e-14 * y_scale) {
    fit.slope = 0.0;
    fit.intercept = y_mean;
    fit.r_squared = 0.0;
  } else {
    fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  }
  return fit;
}

SensitivityReport sensitivity_slopes(
    const std::map<std::string, std::vector<ConcentrationPoint>>& points_by_acid) {
  if (points_by_acid.empty()) throw InsufficientDataError("no acids given");
  SensitivityReport report;
  Eigen::Index n_features = -1;
  for (const auto& [acid, points] : points_by_acid) {
    std::set<double> distinct;
    for (const auto& p : points) distinct.insert(p.log10_concentration);
    if (distinct.size() < 3) {
      throw InsufficientDataError("acid '" + acid + "' has " + std::to_string(distinct.size()) +
                                  " distinct concentrations, need >= 3");
    }
    for (const auto& p : points) {
      if (n_features < 0) n_features = p.features.size();
      if (p.features.size() != n_features) {
        throw ArgumentError("feature vectors of different lengths");
      }
    }
  }

  report.slopes.resize(n_features, static_cast<Eigen::Index>(points_by_acid.size()));
  report.r_squared.resizeLike(report.slopes);
  Eigen::Index col = 0;
  for (const auto& [acid, points] : points_by_acid) {
    report.acids.push_back(acid);
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd x(n);
    Eigen::MatrixXd Y(n, n_features);
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = points[static_cast<std::size_t>(i)].log10_concentration;
      Y.row(i) = points[static_cast<std::size_t>(i)].features.transpose();
    }
    for (Eigen::Index f = 0; f < n_features; ++f) {
      const LineFit fit = fit_line(x, Y.col(f));
      report.slopes(f, col) = fit.slope;
      report.r_squared(f, col) = fit.r_squared;
    }
    ++col;
  }
  return report;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) throw InsufficientDataError("standardizer needs at least two rows");
  if (!X.allFinite()) throw DataError("feature matrix contains NaN or Inf");
  Standardizer s;
  const auto n = static_cast<double>(X.rows());
  s.means = X.colwise().mean().transpose();
  s.stds.resize(X.cols());
  s.constant.assign(static_cast<std::size_t>(X.cols()), false);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd < kMinStandardDeviation) {
      s.stds[j] = 1.0;
      s.constant[static_cast<std::size_t>(j)] = true;
    } else {
      s.stds[j] = sd;
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != means.size()) throw ArgumentError("standardizer width mismatch");
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (constant[static_cast<std::size_t>(j)]) {
      out.col(j).setZero();
    } else {
      out.col(j) = (X.col(j).array() - means[j]) / stds[j];
    }
  }
  return out;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return apply(Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& A, double tolerance) {
  const Eigen::Index p = A.rows();
  if (A.cols() != p) throw ArgumentError("symmetric_eigen needs a square matrix");
  Eigen::MatrixXd a = 0.5 * (A + A.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(p, p);
  const double norm = a.norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index q = 1; q < p; ++q)
      for (Eigen::Index r = 0; r < q; ++r) s += 2.0 * a(r, q) * a(r, q);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= tolerance * norm) break;
    for (Eigen::Index r = 0; r < p - 1; ++r) {
      for (Eigen::Index q = r + 1; q < p; ++q) {
        const double arq = a(r, q);
        if (arq == 0.0) continue;
        const double theta = (a(q, q) - a(r, r)) / (2.0 * arq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double akr = a(k, r);
          const double akq = a(k, q);
          a(k, r) = c * akr - s * akq;
          a(k, q) = s * akr + c * akq;
        }
        for (Eigen::Index k = 0; k < p; ++k) {
          const double ark = a(r, k);
          const double aqk = a(q, k);
          a(r, k) = c * ark - s * aqk;
          a(q, k) = s * ark + c * aqk;
        }
        a(r, q) = 0.0;
        a(q, r) = 0.0;
        for (Eigen::Index k = 0; k < p; ++k) {
          const double vkr = v(k, r);
          const double vkq = v(k, q);
          v(k, r) = c * vkr - s * vkq;
          v(k, q) = s * vkr + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps && off_norm() > tolerance * norm) {
    throw NumericalError("Jacobi eigen-solver did not converge");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen out;
  out.values.resize(p);
  out.vectors.resize(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

double PCAModel::cumulative_ratio(int m) const {
  if (m <= 0) return 0.0;
  return full_variance_ratio.head(std::min<Eigen::Index>(m, full_variance_ratio.size())).sum();
}

PCAModel fit_pca(const Eigen::MatrixXd& X, const PcaOptions& options) {
  if (X.rows() < 2) throw InsufficientDataError("PCA needs at least two rows");
  if (!X.allFinite()) throw DataError("PCA input contains NaN or Inf");
  if (options.n_components <= 0 &&
      !(options.variance_target > 0.0 && options.variance_target <= 1.0)) {
    throw ArgumentError("variance_target must lie in (0, 1]");
  }
  const Eigen::Index p = X.cols();
  PCAModel model;
  model.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(X.rows());

  SymmetricEigen eig = symmetric_eigen(cov);
  Eigen::VectorXd values = eig.values.cwiseMax(0.0);
  const double total = values.sum();
  if (!(total > 1e-300)) {
    throw NumericalError("PCA input has zero total variance (degenerate all-constant matrix)");
  }
  model.full_variance_ratio = values / total;

  int m = 0;
  if (options.n_components > 0) {
    m = static_cast<int>(std::min<Eigen::Index>(options.n_components, p));
  } else {
    double cumulative = 0.0;
    while (m < p) {
      cumulative += model.full_variance_ratio[m];
      ++m;
      if (cumulative >= options.variance_target - 1e-12) break;
    }
  }

  model.components = eig.vectors.leftCols(m);
  for (int k = 0; k < m; ++k) {
    Eigen::Index arg = 0;
    model.components.col(k).cwiseAbs().maxCoeff(&arg);
    if (model.components(arg, k) < 0.0) model.components.col(k) *= -1.0;
  }
  model.explained_variance = values.head(m);
  model.explained_variance_ratio = model.full_variance_ratio.head(m);
  return model;
}

Eigen::MatrixXd project(const PCAModel& pca, const Eigen::MatrixXd& X) {
  if (X.cols() != pca.mean.size()) throw ArgumentError("PCA input width mismatch");
  return (X.rowwise() - pca.mean.transpose()) * pca.components;
}

Eigen::VectorXd project(const PCAModel& pca, const Eigen::VectorXd& x) {
  if (x.size() != pca.mean.size()) throw ArgumentError("PCA input width mismatch");
  return pca.components.transpose() * (x - pca.mean);
}

Eigen::MatrixXd reconstruct(const PCAModel& pca, const Eigen::MatrixXd& scores) {
  return (scores * pca.components.transpose()).rowwise() + pca.mean.transpose();
}

}  // namespace etongue

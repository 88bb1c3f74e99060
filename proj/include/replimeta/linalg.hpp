#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace replimeta::numerics {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Symmetric matrix stored as its row-major lower triangle.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t order);

  /// Builds from a dense matrix; throws std::invalid_argument when the input
  /// is not square or not symmetric to within `tolerance` (absolute).
  static SymmetricMatrix from_dense(const MatrixXd& dense, double tolerance = 1e-12);
  static SymmetricMatrix identity(std::size_t order);

  std::size_t order() const { return order_; }
  double operator()(std::size_t row, std::size_t col) const;
  void set(std::size_t row, std::size_t col, double value);
  MatrixXd to_dense() const;

 private:
  std::size_t index(std::size_t row, std::size_t col) const;

  std::size_t order_;
  std::vector<double> lower_;
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t pivot);
  /// Zero-based index of the failing pivot.
  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

class RankDeficient : public std::runtime_error {
 public:
  explicit RankDeficient(std::size_t column);
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Lower-triangular L with L * L^T = A. Reads only the lower triangle of a
/// dense argument.
MatrixXd cholesky(const SymmetricMatrix& a);
MatrixXd cholesky(const MatrixXd& a);

/// Solves (L L^T) x = b given the Cholesky factor L.
VectorXd cholesky_solve(const MatrixXd& lower, const VectorXd& b);
MatrixXd cholesky_solve(const MatrixXd& lower, const MatrixXd& b);
MatrixXd cholesky_inverse(const MatrixXd& lower);
/// log det(L L^T).
double cholesky_log_det(const MatrixXd& lower);

struct WlsResult {
  VectorXd coefficients;
  /// (X^T W X)^{-1}; callers scale by their own residual variance convention.
  MatrixXd unscaled_covariance;
  VectorXd residuals;
  double weighted_rss = 0.0;
  std::size_t residual_df = 0;
};

/// Minimizes sum_i w_i (y_i - x_i beta)^2. Throws RankDeficient when X is not
/// of full column rank after weighting, std::invalid_argument on shape or
/// weight errors.
WlsResult wls_solve(const MatrixXd& x, const VectorXd& y, const VectorXd& weights);

}  // namespace replimeta::numerics

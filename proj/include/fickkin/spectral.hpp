#pragma once

#include <Eigen/Dense>

namespace fickkin {

/// Uniform periodic grid on the unit torus T^dx, dx in {1, 2}; cell r has
/// multi-index (r0, r1) with r = r0 + cells * r1 and centre (r0 + 1/2) h.
class TorusGrid {
 public:
  TorusGrid(int dx, int cells);

  int dim() const { return dx_; }
  int cells() const { return cells_; }
  int size() const { return size_; }
  double spacing() const { return 1.0 / cells_; }
  double cell_volume() const;
  double coord(int r, int k) const;
  /// Index of the neighbour of r shifted by s along axis k (periodic).
  int shift(int r, int k, int s) const;

 private:
  int dx_;
  int cells_;
  int size_;
};

/// Spectral derivative of order `order` along axis k of one row sampled on the grid.
/// Odd derivatives drop the Nyquist mode.
Eigen::RowVectorXd spectral_derivative(const Eigen::RowVectorXd& g, const TorusGrid& grid, int k, int order = 1);

/// sum_{|alpha| <= s} ||d^alpha g||^2_{L^2} summed over rows, through Parseval.
double hs_norm_squared(const Eigen::MatrixXd& g, const TorusGrid& grid, int s);
double hs_norm(const Eigen::MatrixXd& g, const TorusGrid& grid, int s);

/// L^2(T^dx) norm of the rows stacked together.
double l2_norm(const Eigen::MatrixXd& g, const TorusGrid& grid);

/// Central finite-difference derivative of even order `accuracy` (2..10), for cross-checks.
Eigen::RowVectorXd fd_derivative(const Eigen::RowVectorXd& g, const TorusGrid& grid, int k, int accuracy);

}  // namespace fickkin

#include "fickkin/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fickkin/errors.hpp"

namespace fickkin {

TorusGrid::TorusGrid(int dx, int cells) : dx_(dx), cells_(cells), size_(dx == 2 ? cells * cells : cells) {
  if (dx != 1 && dx != 2) throw config_error("spatial dimension must be 1 or 2");
  if (cells < 4) throw config_error("spatial grid needs at least 4 cells");
}

double TorusGrid::cell_volume() const { return dx_ == 2 ? spacing() * spacing() : spacing(); }

double TorusGrid::coord(int r, int k) const {
  const int idx = k == 0 ? r % cells_ : r / cells_;
  return (idx + 0.5) * spacing();
}

int TorusGrid::shift(int r, int k, int s) const {
  int i0 = r % cells_, i1 = r / cells_;
  if (k == 0)
    i0 = ((i0 + s) % cells_ + cells_) % cells_;
  else
    i1 = ((i1 + s) % cells_ + cells_) % cells_;
  return i0 + cells_ * i1;
}

namespace {

using cplx = std::complex<double>;

// Forward (sign -1) or backward (+1) unnormalized transform in the layout r = r0 + cells * r1.
void fft(std::vector<cplx>& data, const TorusGrid& grid, int sign) {
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = grid.dim() == 1
                       ? fftw_plan_dft_1d(grid.cells(), p, p, sign, FFTW_ESTIMATE)
                       : fftw_plan_dft_2d(grid.cells(), grid.cells(), p, p, sign, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

// Signed wavenumber of index idx.
int wavenumber(int idx, int cells) { return idx <= cells / 2 ? idx : idx - cells; }

// (2 pi i k)^order with the Nyquist mode dropped for odd orders.
cplx symbol(int idx, int cells, int order) {
  const int k = wavenumber(idx, cells);
  if (order % 2 == 1 && cells % 2 == 0 && idx == cells / 2) return 0.0;
  return std::pow(cplx(0.0, 2.0 * std::numbers::pi * k), order);
}

}  // namespace

Eigen::RowVectorXd spectral_derivative(const Eigen::RowVectorXd& g, const TorusGrid& grid, int k, int order) {
  if (g.size() != grid.size()) throw dimension_error("spectral_derivative: size mismatch");
  std::vector<cplx> data(grid.size());
  for (int r = 0; r < grid.size(); ++r) data[r] = g(r);
  fft(data, grid, FFTW_FORWARD);
  const int c = grid.cells();
  for (int r = 0; r < grid.size(); ++r) {
    const int idx = k == 0 ? r % c : r / c;
    data[r] *= symbol(idx, c, order);
  }
  fft(data, grid, FFTW_BACKWARD);
  Eigen::RowVectorXd out(grid.size());
  for (int r = 0; r < grid.size(); ++r) out(r) = data[r].real() / grid.size();
  return out;
}

double hs_norm_squared(const Eigen::MatrixXd& g, const TorusGrid& grid, int s) {
  if (g.cols() != grid.size()) throw dimension_error("hs_norm: size mismatch");
  if (s < 0) throw config_error("hs_norm: s must be non-negative");
  const int c = grid.cells();
  const double X = grid.size();
  double total = 0.0;
  std::vector<cplx> data(grid.size());
  for (int i = 0; i < g.rows(); ++i) {
    for (int r = 0; r < grid.size(); ++r) data[r] = g(i, r);
    fft(data, grid, FFTW_FORWARD);
    for (int r = 0; r < grid.size(); ++r) {
      const int i0 = r % c, i1 = r / c;
      double w = 0.0;
      if (grid.dim() == 1) {
        for (int a = 0; a <= s; ++a) w += std::norm(symbol(i0, c, a));
      } else {
        for (int a0 = 0; a0 <= s; ++a0)
          for (int a1 = 0; a0 + a1 <= s; ++a1) w += std::norm(symbol(i0, c, a0)) * std::norm(symbol(i1, c, a1));
      }
      total += w * std::norm(data[r]);
    }
  }
  return total / (X * X);
}

double hs_norm(const Eigen::MatrixXd& g, const TorusGrid& grid, int s) { return std::sqrt(hs_norm_squared(g, grid, s)); }

double l2_norm(const Eigen::MatrixXd& g, const TorusGrid& grid) {
  if (g.cols() != grid.size()) throw dimension_error("l2_norm: size mismatch");
  return std::sqrt(g.squaredNorm() * grid.cell_volume());
}

Eigen::RowVectorXd fd_derivative(const Eigen::RowVectorXd& g, const TorusGrid& grid, int k, int accuracy) {
  static const std::vector<std::vector<double>> coeffs = {
      {1.0 / 2},
      {2.0 / 3, -1.0 / 12},
      {3.0 / 4, -3.0 / 20, 1.0 / 60},
      {4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280},
      {5.0 / 6, -5.0 / 21, 5.0 / 84, -5.0 / 504, 1.0 / 1260}};
  if (accuracy < 2 || accuracy > 10 || accuracy % 2) throw config_error("fd_derivative: accuracy must be 2..10, even");
  if (g.size() != grid.size()) throw dimension_error("fd_derivative: size mismatch");
  const auto& cf = coeffs[accuracy / 2 - 1];
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(grid.size());
  for (int r = 0; r < grid.size(); ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < cf.size(); ++s) {
      const int o = static_cast<int>(s) + 1;
      acc += cf[s] * (g(grid.shift(r, k, o)) - g(grid.shift(r, k, -o)));
    }
    out(r) = acc / grid.spacing();
  }
  return out;
}

}  // namespace fickkin

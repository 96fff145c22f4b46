#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fickkin/mixture.hpp"

namespace fickkin {

/// Tensor grid on [-R_v, R_v]^d with trapezoidal weights and a uniform angular
/// grid on S^{d-1}. Node q has multi-index (k_0, ..., k_{d-1}), q = k_0 + M_v k_1.
class VelocityGrid {
 public:
  VelocityGrid(int d, double rv, int mv, int angular_count);

  int dim() const { return d_; }
  double rv() const { return rv_; }
  int mv() const { return mv_; }
  double spacing() const { return h_; }
  int size() const { return static_cast<int>(weights_.size()); }
  int angular_count() const { return static_cast<int>(angular_weights_.size()); }

  const double* node(int q) const { return &nodes_[static_cast<std::size_t>(q) * d_]; }
  double node(int q, int k) const { return nodes_[static_cast<std::size_t>(q) * d_ + k]; }
  double weight(int q) const { return weights_[q]; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const double* sigma(int a) const { return &sigmas_[static_cast<std::size_t>(a) * d_]; }
  double angular_weight(int a) const { return angular_weights_[a]; }

  /// 1-D coordinate of lattice index k.
  double coord(int k) const { return -rv_ + k * h_; }
  /// Index of -v_q (node set is symmetric).
  int mirror(int q) const;

  std::uint64_t hash() const;

 private:
  int d_;
  double rv_;
  int mv_;
  double h_;
  std::vector<double> nodes_;
  Eigen::VectorXd weights_;
  std::vector<double> sigmas_;
  std::vector<double> angular_weights_;
};

/// Validates arguments (M_v even and >= 8, angular_count >= 8, R_v > 0).
VelocityGrid build_grid(int d, double rv, int mv, int angular_count);

/// Default truncation R_v = 6 / sqrt(min_i m_i).
double default_rv(const Mixture& mix);

/// Species-stacked grid functions: row i holds species i on all nodes (N x Q_v).
using GridFunction = Eigen::MatrixXd;

/// Sampled Maxwellian vector M_i(v_q) = n_i mu_i(v_q).
GridFunction maxwellian_vector(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid);
/// Sampled global Maxwellian mu_i(v_q).
GridFunction mu_vector(const Mixture& mix, const VelocityGrid& grid);

/// <f, g>_{L^2_v(M^{-1/2})} = sum_i sum_q w_q f_i g_i / M_i, quadrature version.
double weighted_inner(const GridFunction& f, const GridFunction& g, const GridFunction& M,
                      const VelocityGrid& grid);
double weighted_norm(const GridFunction& f, const GridFunction& M, const VelocityGrid& grid);

/// Quadrature of a single species row.
double integrate(const Eigen::Ref<const Eigen::RowVectorXd>& row, const VelocityGrid& grid);

}  // namespace fickkin

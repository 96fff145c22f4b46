#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fickkin/collision.hpp"
#include "fickkin/mixture.hpp"
#include "fickkin/velocity_grid.hpp"

namespace fickkin {

/// n-independent pieces of the linearized operator in the symmetric
/// coordinates u = sqrt(w / mu) f. For every bucket k the operator at
/// concentration n is sum_k n_k T_k(iq, js) sqrt(n_j / n_i).
/// mono[k] collects the (k,k) self interactions, bi[k] the cross interactions.
struct OperatorBlocks {
  int species = 0;
  int nodes = 0;
  std::vector<Eigen::MatrixXd> mono;
  std::vector<Eigen::MatrixXd> bi;
  std::uint64_t stencil_hash = 0;
  double build_seconds = 0.0;

  int size() const { return species * nodes; }
};

/// Discrete Dirichlet form of L:
///   <f, L f> = -1/4 sum_{ij} sum_{q,p,a} w_q w_p w_a B_ij M_i(q) M_j(p) (h_i' + h_j*' - h_i - h_j*)^2
/// with h = f / M and h' interpolated at the pre-collisional velocities.
OperatorBlocks assemble_blocks(const CollisionStencil& stencil);

/// Binary cache "FICKL1". The header carries dims, the mixture hash, the
/// concentration the blocks were requested for and the grid parameters.
void save_blocks(const OperatorBlocks& b, const Mixture& mix, const VelocityGrid& grid,
                 const Eigen::VectorXd& n, const std::string& path);
/// Returns false on a missing or corrupt file or a grid mismatch; throws a
/// config error when the mixture hash differs.
bool load_blocks(OperatorBlocks& b, const Mixture& mix, const VelocityGrid& grid, const std::string& path);

struct Spectrum {
  Eigen::VectorXd eigenvalues;  // of the symmetric matrix S, ascending
  Eigen::MatrixXd vectors;
  int near_zero = 0;            // |lambda| <= 1e-8 ||S||
  double lambda_num = 0.0;      // smallest -lambda off the kernel
  double principal_angle = 0.0; // sin of the largest angle between the near-null space and span(phi)
};

/// Kernel basis phi_k as grid functions (N+d+1 of them). With quadrature = true
/// the normalizations are computed by quadrature on the grid (orthonormal to
/// roundoff); otherwise the closed-form constants n_k, rho_inf, c_inf, d/m_i are used.
std::vector<GridFunction> kernel_basis(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                       bool quadrature = true);

/// Largest |<phi_k, phi_l> - delta_kl|.
double gram_defect(const std::vector<GridFunction>& basis, const GridFunction& M, const VelocityGrid& grid);

class LinearizedOperator {
 public:
  LinearizedOperator(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                     const Eigen::VectorXd& n);

  const Mixture& mixture() const { return *mix_; }
  const VelocityGrid& grid() const { return *grid_; }
  const Eigen::VectorXd& n() const { return n_; }
  const GridFunction& maxwellian() const { return M_; }
  int size() const { return static_cast<int>(S_.rows()); }
  int kernel_dim() const { return static_cast<int>(U_.cols()); }

  /// Symmetric matrix of L in u coordinates (u = sqrt(w/M) f), deflated on span(phi).
  const Eigen::MatrixXd& matrix() const { return S_; }
  /// Undeflated mono-species and bi-species parts, same coordinates.
  Eigen::MatrixXd mono_part() const;
  Eigen::MatrixXd bi_part() const;
  /// Orthonormal kernel basis, columns in u coordinates.
  const Eigen::MatrixXd& basis_u() const { return U_; }
  const std::vector<GridFunction>& basis() const { return phi_; }

  Eigen::VectorXd to_u(const GridFunction& f) const;
  GridFunction from_u(const Eigen::VectorXd& u) const;

  GridFunction apply(const GridFunction& f) const;
  GridFunction project(const GridFunction& f) const;  // pi_L
  double inner(const GridFunction& f, const GridFunction& g) const;
  double norm(const GridFunction& f) const;

  /// ||L|| in the weighted metric (C_L).
  double op_norm() const { return norm_; }
  /// max_k ||L_raw phi_k|| / ||L_raw|| before deflation.
  double raw_kernel_residual() const { return raw_kernel_residual_; }
  /// Gram defect of the closed-form basis constants.
  double analytic_gram_defect() const { return analytic_gram_defect_; }

  /// Pseudo-inverse: L f = rhs with f orthogonal to the kernel. Strict mode
  /// rejects rhs with ||pi_L rhs|| > 1e-8 ||rhs||; lenient mode projects first.
  GridFunction solve(const GridFunction& rhs, bool strict = true) const;
  Eigen::VectorXd solve_u(const Eigen::VectorXd& rhs, bool strict = true) const;

  /// Dense eigendecomposition, computed once. Throws a structural error when
  /// more than N+d+1 eigenvalues are below the kernel tolerance.
  const Spectrum& spectrum() const;

  std::uint64_t hash() const;

 private:
  Eigen::MatrixXd combine(const std::vector<Eigen::MatrixXd>& parts) const;

  const OperatorBlocks* blocks_;
  const Mixture* mix_;
  const VelocityGrid* grid_;
  Eigen::VectorXd n_;
  GridFunction M_;
  Eigen::VectorXd scale_;  // sqrt(w/M), stacked species-major
  std::vector<GridFunction> phi_;
  Eigen::MatrixXd U_;
  Eigen::MatrixXd S_;
  double norm_ = 0.0;
  double raw_kernel_residual_ = 0.0;
  double analytic_gram_defect_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  mutable std::unique_ptr<Spectrum> spectrum_;
};

struct CollisionFrequency {
  std::vector<GridFunction> nu_ij;  // nu_ij[i * N + j] is a 1 x Q_v row
  GridFunction nu;                  // N x Q_v, nu_i = sum_j nu_ij
  double nu_min = 0.0;
};

/// nu_ij(v) = C^Phi_ij sum_{p,a} w_p w_a b(cos theta) |v - v_p|^gamma M_j(v_p).
CollisionFrequency collision_frequency(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid);

struct SpectralInputs {
  double c2 = 1.0;
  std::vector<double> c_phi;  // per species, default C^Phi_ii
  std::vector<double> c_b;    // per species, default angular_cb
  std::vector<double> r;      // per species, default 1
};

struct SpectralConstants {
  std::vector<double> lambda0;
  std::vector<double> lambda_i;
  double Lambda = 0.0;
  double eta0 = 0.0;
  double lambda_L = 0.0;
  double C_L = 0.0;
  double C_0 = 0.0;
  double C_2 = 1.0;
  double nu_min = 0.0;
  double c_inf = 0.0;
  double rho_inf = 0.0;
  double c_b = 0.0;
  double lambda_num = 0.0;  // copied from the operator spectrum when available
};

/// lambda_0 = c_Phi c_b exp(-4 R^2) / 96.
double lambda0(double c_phi, double c_b, double r);

/// Lambda(m, n) = 1/4 min_ij sum w_q w_p w_a m_i^2 B_ij min{|v-v'|^2/3, (|v'|^2-|v|^2)^2} M_i M_j*.
double Lambda_quadrature(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid);

SpectralConstants explicit_constants(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                     const SpectralInputs& in, const LinearizedOperator* op = nullptr);

}  // namespace fickkin

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fickkin/fick_matrix.hpp"
#include "fickkin/fick_solver.hpp"
#include "fickkin/linear_operator.hpp"
#include "fickkin/spectral.hpp"

namespace fickkin {

/// Exact solution of the frozen Fick system d_t n~ + d_x(A d_x n~) = 0 on T^1
/// for initial data sum_k (s_k sin(2 pi k x) + c_k cos(2 pi k x)).
class FickReference {
 public:
  FickReference(const Eigen::VectorXd& n_inf, const Eigen::MatrixXd& A);

  void add_mode(int k, const Eigen::VectorXd& sin_coef, const Eigen::VectorXd& cos_coef);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& n_inf() const { return n_inf_; }
  bool trivial() const;

  /// N x cells samples at cell centres.
  Eigen::MatrixXd value(double t, const TorusGrid& grid) const;
  Eigen::MatrixXd dx(double t, const TorusGrid& grid) const;
  Eigen::MatrixXd dt(double t, const TorusGrid& grid) const;

 private:
  // Coefficients of sin and cos at time t for mode index m (derivative order in x).
  void coefficients(std::size_t m, double t, Eigen::VectorXd& s, Eigen::VectorXd& c) const;
  Eigen::MatrixXd propagator(int k, double t) const;

  Eigen::VectorXd n_inf_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd V_, Vinv_;  // A = V diag(lam) V^{-1}
  Eigen::VectorXd lam_;
  std::vector<int> k_;
  std::vector<Eigen::VectorXd> s_, c_;
};

/// Source S = mu d_t n~ + (1/eps) v_1 mu d_x n~ at time t, one column per cell,
/// in the operator's u coordinates.
Eigen::MatrixXd build_source(const FickReference& ref, double eps, double t, const LinearizedOperator& op,
                             const TorusGrid& grid);
/// Same from sampled d_t n~ and d_x n~ (N x cells each).
Eigen::MatrixXd build_source(const Eigen::MatrixXd& nt, const Eigen::MatrixXd& nx, double eps,
                             const LinearizedOperator& op);

struct SourceReport {
  std::vector<double> t;
  std::vector<double> pi_ratio;       // max_x ||pi_L S|| / ||S||
  std::vector<double> fluid_control;  // eps ||d_t n~||_{H^s} + ||d_x n~||_{H^s}
  double max_pi_ratio = 0.0;
  bool control_decreasing = true;
  bool trivial = false;
};

SourceReport source_structure(const FickReference& ref, double eps, const LinearizedOperator& op,
                              const TorusGrid& grid, const std::vector<double>& times, int s = 1);

/// Source structure along a live Fick run on a 1-D torus: d_x n~ spectral,
/// d_t n~ = -d_x(A d_x n~) with A = N_inf abar(n_inf) from the operator.
SourceReport source_structure_run(ConcentrationField field, FickSolver& solver, const FickAssembly& fa, double eps,
                                  const LinearizedOperator& op, double t_end, double dt, int samples, int s = 1);

struct SurrogateNorm {
  double l2 = 0.0;   // ||f||^2 in L^2_{x,v}(mu^{-1/2})
  double dx = 0.0;   // ||d_x f||^2
  double dv = 0.0;   // eps^2 (||d_v1 f||^2 + ||d_v2 f||^2)
  double total() const { return l2 + (l2 + dx) + dv; }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> surrogate;
  std::vector<SurrogateNorm> parts;
  std::vector<double> flux_error;  // ||(1/eps) int v_1 f - A d_x n~||_{L^2_x}
  std::vector<double> l2;          // ||f||_{L^2_{x,v}(M^{-1/2})}
  double initial_surrogate = 0.0;
  double max_surrogate_ratio = 0.0;
  double sup_flux_error = 0.0;

  /// sup of the flux error over t >= t_from.
  double sup_flux_error_after(double t_from) const;
};

/// Linearized kinetic equation d_t f + (1/eps) v_1 d_x f = (1/eps^2) L f - S on
/// T^1 x R^2 (or R^1), Lie splitting of exact spectral transport and a
/// backward-Euler collision substep (I - dt/eps^2 L)^{-1} through the eigenbasis of L.
class KineticSimulator {
 public:
  KineticSimulator(const LinearizedOperator& op, const FickAssembly& fa, const FickReference& ref, double eps,
                   int cells, bool source_on = true);

  const TorusGrid& space() const { return space_; }
  double eps() const { return eps_; }
  double time() const { return t_; }

  /// State in u coordinates, one column per cell.
  const Eigen::MatrixXd& state() const { return u_; }
  void set_state(const Eigen::MatrixXd& u, double t = 0.0);
  /// Same grid function in every cell.
  void set_uniform(const GridFunction& f, double t = 0.0);
  /// f_in = eps L^{-1}(Pi^perp(v_1 mu d_x n~_in)).
  void set_well_prepared();

  void step(double dt);
  /// Throws a numerical error once the surrogate norm exceeds 10x its initial value.
  Trajectory run(double t_end, double dt, int sample_every = 1);

  /// (1/eps) int v_1 f_i per cell, N x cells.
  Eigen::MatrixXd scaled_flux() const;
  double flux_error() const;
  SurrogateNorm surrogate() const;
  double l2_norm() const;

 private:
  void transport(double dt);
  void collide(double dt);

  const LinearizedOperator* op_;
  const FickAssembly* fa_;
  const FickReference* ref_;
  double eps_;
  TorusGrid space_;
  bool source_on_;
  Eigen::MatrixXd u_;
  double t_ = 0.0;
  Eigen::VectorXd scale_;  // sqrt(w / M)
  Eigen::VectorXd flux_w_;  // w v_1 / scale, stacked
};

struct EpsStudy {
  std::vector<double> eps;
  std::vector<double> flux_error;
  std::vector<double> stability;  // sup_t surrogate / initial surrogate
  double order = 0.0;
  bool monotone = true;
  bool degenerate = false;
  bool well_prepared = true;
  std::vector<Trajectory> runs;
};

/// One run per eps (strictly decreasing, at least 3 values), dt = dt_factor * eps^2.
/// Ill-prepared runs start from f = 0 and fit on [T/4, T].
EpsStudy eps_convergence_study(const LinearizedOperator& op, const FickAssembly& fa, const FickReference& ref,
                               const std::vector<double>& eps, double t_end, int cells, double dt_factor = 0.1,
                               bool well_prepared = true);

}  // namespace fickkin

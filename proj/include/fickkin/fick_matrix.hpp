#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fickkin/linear_operator.hpp"

namespace fickkin {

/// C^{(i,k)} = (mu_i v_k delta_ij)_j as a grid function.
GridFunction c_tensor(const Mixture& mix, const VelocityGrid& grid, int i, int k);

struct FickAssembly {
  Eigen::MatrixXd abar;         // abar_ij = <L^{-1} X_i, X_j>
  Eigen::MatrixXd a;            // a_ij = n_i abar_ij
  Eigen::VectorXd n;
  Eigen::VectorXd nm;           // n o m
  Eigen::VectorXd eigenvalues;  // of abar, ascending
  double symmetry_defect = 0.0;  // ||abar - abar^T|| / ||abar||
  double kernel_residual = 0.0;  // ||abar nm|| / (||abar|| ||nm||)
  std::vector<GridFunction> x;       // X_i = C^{(i,1)} - pi_L C^{(i,1)}
  std::vector<GridFunction> linv_x;  // L^{-1} X_i
};

FickAssembly assemble_fick(const LinearizedOperator& op);

struct EigenReport {
  Eigen::VectorXd beta;  // the N-1 nonzero eigenvalues, ascending
  double zero_eigenvalue = 0.0;
  int negative_count = 0;
  double C1 = 0.0;        // max_j ||X_j||^2 in L^2(mu^{-1/2})
  double lambda_used = 0.0;
  double lambda_A = 0.0;  // C1 / (min n * lambda_used)
  double slack = 0.1;
  bool all_negative = false;
  bool bound_ok = false;
  double spread = 0.0;  // (max beta - min beta) / |min beta|
  Eigen::VectorXd a_beta;  // nonzero eigenvalues of A = N abar, ascending
  double a_spread = 0.0;
  bool ok() const { return all_negative && bound_ok; }
};

/// Eigenvalue signature of abar with lambda_A built on lambda (the measured gap by default).
EigenReport eigen_report(const FickAssembly& fa, const LinearizedOperator& op, double lambda = 0.0,
                         double slack = 0.1);

struct LemmaReport {
  Eigen::MatrixXd diag_k1;  // <L^{-1}(C^{(i,1)} - pi), C^{(j,1)} - pi>
  Eigen::MatrixXd diag_k2;
  Eigen::MatrixXd cross;    // k = 1, l = 2
  double scale = 0.0;
  double cross_defect = 0.0;  // max |cross| / scale
  double k_defect = 0.0;      // max |diag_k1 - diag_k2| / scale
  bool diag_negative = false;
  bool ok(double tol = 1e-8) const { return cross_defect <= tol && k_defect <= tol && diag_negative; }
};

/// Requires d = 2.
LemmaReport verify_lemma_cij(const LinearizedOperator& op);

struct PiAResult {
  Eigen::VectorXd kernel;  // projection onto span(n o m)
  Eigen::VectorXd perp;
};

/// Orthogonal projection onto span(n o m), normalized by |n o m|^2.
PiAResult projection_PiA(const Eigen::VectorXd& X, const Eigen::VectorXd& n, const Eigen::VectorXd& m);

struct Sensitivity {
  std::vector<double> eps;
  std::vector<Eigen::MatrixXd> derivative;  // central differences, one per eps
  std::vector<double> increments;           // ||A(n + eps h) - A(n)||
  double richardson_order = 0.0;            // order of the central difference
  double continuity_slope = 0.0;            // log-log slope of the increments
};

Sensitivity sobolev_sensitivity(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                                const Eigen::VectorXd& n, const Eigen::VectorXd& h,
                                const std::vector<double>& eps = {1e-2, 5e-3, 2.5e-3});

/// Fick matrices at n from precomputed blocks (assembles a fresh operator).
FickAssembly fick_at(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                     const Eigen::VectorXd& n);

/// Moments int f_i v_k dv, returned as N x d.
Eigen::MatrixXd moment_flux(const GridFunction& f, const VelocityGrid& grid);

/// Brute-force flux: f = L^{-1}(sum_j g_j mu_j v_1 e_j) (lenient), J_i = int f_i v_1.
/// Returns J (length N).
Eigen::VectorXd kinetic_flux(const LinearizedOperator& op, const Eigen::VectorXd& g);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fickkin

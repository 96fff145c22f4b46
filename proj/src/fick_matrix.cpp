#include "fickkin/fick_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "fickkin/errors.hpp"

namespace fickkin {

GridFunction c_tensor(const Mixture& mix, const VelocityGrid& grid, int i, int k) {
  GridFunction c = GridFunction::Zero(mix.species(), grid.size());
  for (int q = 0; q < grid.size(); ++q) c(i, q) = mu(mix, i, grid.node(q)) * grid.node(q, k);
  return c;
}

FickAssembly assemble_fick(const LinearizedOperator& op) {
  const Mixture& mix = op.mixture();
  const int N = mix.species();
  FickAssembly fa;
  fa.n = op.n();
  fa.nm = fa.n.cwiseProduct(mix.masses());
  for (int i = 0; i < N; ++i) {
    const GridFunction c = c_tensor(mix, op.grid(), i, 0);
    fa.x.push_back(c - op.project(c));
    fa.linv_x.push_back(op.solve(fa.x.back(), true));
  }
  fa.abar.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) fa.abar(i, j) = op.inner(fa.linv_x[i], fa.x[j]);
  const double an = fa.abar.norm();
  fa.symmetry_defect = an > 0.0 ? (fa.abar - fa.abar.transpose()).norm() / an : 0.0;
  fa.kernel_residual = an > 0.0 ? (fa.abar * fa.nm).norm() / (an * fa.nm.norm()) : 0.0;
  fa.a = fa.n.asDiagonal() * fa.abar;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (fa.abar + fa.abar.transpose()));
  fa.eigenvalues = es.eigenvalues();
  return fa;
}

EigenReport eigen_report(const FickAssembly& fa, const LinearizedOperator& op, double lambda, double slack) {
  const Mixture& mix = op.mixture();
  const VelocityGrid& grid = op.grid();
  const int N = mix.species();
  EigenReport r;
  r.slack = slack;
  // The eigenvalue closest to zero is the kernel direction n o m.
  Eigen::Index zero_idx = 0;
  fa.eigenvalues.cwiseAbs().minCoeff(&zero_idx);
  r.zero_eigenvalue = fa.eigenvalues(zero_idx);
  r.beta.resize(N - 1);
  for (Eigen::Index k = 0, c = 0; k < fa.eigenvalues.size(); ++k)
    if (k != zero_idx) r.beta(c++) = fa.eigenvalues(k);
  r.negative_count = static_cast<int>((r.beta.array() < 0.0).count());
  r.all_negative = r.negative_count == N - 1;

  const GridFunction muv = mu_vector(mix, grid);
  for (int j = 0; j < N; ++j) r.C1 = std::max(r.C1, weighted_inner(fa.x[j], fa.x[j], muv, grid));
  r.lambda_used = lambda > 0.0 ? lambda : op.spectrum().lambda_num;
  r.lambda_A = r.C1 / (fa.n.minCoeff() * r.lambda_used);
  r.bound_ok = r.beta.size() > 0 && r.beta.minCoeff() >= -r.lambda_A * (1.0 + slack);
  if (r.beta.size() > 0 && r.beta.minCoeff() != 0.0)
    r.spread = (r.beta.maxCoeff() - r.beta.minCoeff()) / std::abs(r.beta.minCoeff());
  // A is similar to N^{1/2} abar N^{1/2}, which is symmetric.
  const Eigen::VectorXd sq = fa.n.cwiseSqrt();
  const Eigen::MatrixXd As = sq.asDiagonal() * (0.5 * (fa.abar + fa.abar.transpose())) * sq.asDiagonal();
  const Eigen::VectorXd ae = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(As).eigenvalues();
  Eigen::Index az = 0;
  ae.cwiseAbs().minCoeff(&az);
  r.a_beta.resize(N - 1);
  for (Eigen::Index k = 0, c = 0; k < ae.size(); ++k)
    if (k != az) r.a_beta(c++) = ae(k);
  if (r.a_beta.size() > 0 && r.a_beta.minCoeff() != 0.0)
    r.a_spread = (r.a_beta.maxCoeff() - r.a_beta.minCoeff()) / std::abs(r.a_beta.minCoeff());
  return r;
}

LemmaReport verify_lemma_cij(const LinearizedOperator& op) {
  const Mixture& mix = op.mixture();
  const VelocityGrid& grid = op.grid();
  if (grid.dim() != 2) throw config_error("verify_lemma_cij needs d = 2");
  const int N = mix.species();
  std::vector<GridFunction> x1, x2, l1;
  for (int i = 0; i < N; ++i) {
    const GridFunction c1 = c_tensor(mix, grid, i, 0), c2 = c_tensor(mix, grid, i, 1);
    x1.push_back(c1 - op.project(c1));
    x2.push_back(c2 - op.project(c2));
    l1.push_back(op.solve(x1.back(), true));
  }
  std::vector<GridFunction> l2;
  for (int i = 0; i < N; ++i) l2.push_back(op.solve(x2[i], true));
  LemmaReport r;
  r.diag_k1.resize(N, N);
  r.diag_k2.resize(N, N);
  r.cross.resize(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      r.diag_k1(i, j) = op.inner(l1[i], x1[j]);
      r.diag_k2(i, j) = op.inner(l2[i], x2[j]);
      r.cross(i, j) = op.inner(l1[i], x2[j]);
    }
  r.scale = std::max(r.diag_k1.diagonal().cwiseAbs().maxCoeff(), r.diag_k2.diagonal().cwiseAbs().maxCoeff());
  if (r.scale > 0.0) {
    r.cross_defect = r.cross.cwiseAbs().maxCoeff() / r.scale;
    r.k_defect = (r.diag_k1 - r.diag_k2).cwiseAbs().maxCoeff() / r.scale;
  }
  r.diag_negative = (r.diag_k1.diagonal().array() < 0.0).all() && (r.diag_k2.diagonal().array() < 0.0).all();
  return r;
}

PiAResult projection_PiA(const Eigen::VectorXd& X, const Eigen::VectorXd& n, const Eigen::VectorXd& m) {
  if (X.size() != n.size() || n.size() != m.size()) throw dimension_error("projection_PiA: size mismatch");
  const Eigen::VectorXd nm = n.cwiseProduct(m);
  const double nn = nm.squaredNorm();
  if (nn == 0.0) throw domain_error("projection_PiA: n o m vanishes");
  PiAResult r;
  r.kernel = (nm.dot(X) / nn) * nm;
  r.perp = X - r.kernel;
  return r;
}

FickAssembly fick_at(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                     const Eigen::VectorXd& n) {
  LinearizedOperator op(blocks, mix, grid, n);
  return assemble_fick(op);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw dimension_error("loglog_slope needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

Sensitivity sobolev_sensitivity(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                                const Eigen::VectorXd& n, const Eigen::VectorXd& h, const std::vector<double>& eps) {
  require_positive(mix, n);
  if (h.size() != n.size()) throw dimension_error("sobolev_sensitivity: direction has wrong length");
  Sensitivity s;
  s.eps = eps;
  const int N = mix.species();
  if (h.norm() == 0.0) {
    for (std::size_t k = 0; k < eps.size(); ++k) {
      s.derivative.push_back(Eigen::MatrixXd::Zero(N, N));
      s.increments.push_back(0.0);
    }
    return s;
  }
  for (double e : eps)
    if (((n - e * h).array() <= 0.0).any() || ((n + e * h).array() <= 0.0).any())
      throw domain_error("sobolev_sensitivity: probe leaves the positive cone");
  const Eigen::MatrixXd A0 = fick_at(blocks, mix, grid, n).a;
  for (double e : eps) {
    const Eigen::MatrixXd Ap = fick_at(blocks, mix, grid, n + e * h).a;
    const Eigen::MatrixXd Am = fick_at(blocks, mix, grid, n - e * h).a;
    s.derivative.push_back((Ap - Am) / (2.0 * e));
    s.increments.push_back((Ap - A0).norm());
  }
  if (eps.size() >= 3) {
    const double d1 = (s.derivative[0] - s.derivative[1]).norm();
    const double d2 = (s.derivative[1] - s.derivative[2]).norm();
    if (d1 > 0.0 && d2 > 0.0) s.richardson_order = std::log(d1 / d2) / std::log(eps[0] / eps[1]);
  }
  if (eps.size() >= 2) s.continuity_slope = loglog_slope(eps, s.increments);
  return s;
}

Eigen::MatrixXd moment_flux(const GridFunction& f, const VelocityGrid& grid) {
  if (f.cols() != grid.size()) throw dimension_error("moment_flux: shape mismatch");
  Eigen::MatrixXd J(f.rows(), grid.dim());
  for (int i = 0; i < f.rows(); ++i)
    for (int k = 0; k < grid.dim(); ++k) {
      double acc = 0.0;
      for (int q = 0; q < grid.size(); ++q) acc += grid.weight(q) * f(i, q) * grid.node(q, k);
      J(i, k) = acc;
    }
  return J;
}

Eigen::VectorXd kinetic_flux(const LinearizedOperator& op, const Eigen::VectorXd& g) {
  const Mixture& mix = op.mixture();
  const int N = mix.species();
  if (g.size() != N) throw dimension_error("kinetic_flux: gradient has wrong length");
  GridFunction W = GridFunction::Zero(N, op.grid().size());
  for (int j = 0; j < N; ++j) W += g(j) * c_tensor(mix, op.grid(), j, 0);
  const GridFunction f = op.solve(W, false);
  return moment_flux(f, op.grid()).col(0);
}

}  // namespace fickkin

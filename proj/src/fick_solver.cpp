#include "fickkin/fick_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fickkin/errors.hpp"
#include "fickkin/fick_matrix.hpp"

namespace fickkin {

AbarProvider frozen_provider(const Eigen::MatrixXd& abar_inf) {
  return [abar_inf](const Eigen::VectorXd&) { return abar_inf; };
}

QuasilinearProvider::QuasilinearProvider(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                                         double step)
    : blocks_(&blocks), mix_(&mix), grid_(&grid), step_(step) {
  if (!(step > 0.0)) throw config_error("quantization step must be positive");
}

Eigen::MatrixXd QuasilinearProvider::operator()(const Eigen::VectorXd& n) {
  std::vector<long> key(n.size());
  Eigen::VectorXd nq(n.size());
  for (int i = 0; i < n.size(); ++i) {
    key[i] = std::lround(n(i) / step_);
    nq(i) = key[i] * step_;
  }
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ++misses_;
  Eigen::MatrixXd abar = fick_at(*blocks_, *mix_, *grid_, nq).abar;
  cache_.emplace(key, abar);
  return abar;
}

InitialReport validate_initial(const ConcentrationField& field, double delta, double delta_s, int s) {
  InitialReport r;
  const Eigen::MatrixXd pert = field.perturbation();
  r.min_value = field.n.minCoeff();
  for (int i = 0; i < pert.rows(); ++i)
    r.max_mean = std::max(r.max_mean, std::abs(pert.row(i).sum() * field.grid.cell_volume()));
  const Eigen::RowVectorXd cl = field.m.transpose() * pert;
  r.max_closure = cl.cwiseAbs().maxCoeff();
  r.hs = hs_norm(pert, field.grid, s);
  const double scale = std::max(1.0, pert.cwiseAbs().maxCoeff());
  if (r.min_value < delta) r.failures.push_back("positivity: min n_i below delta");
  if (r.max_mean > 1e-12 * scale) r.failures.push_back("zero mean: perturbation has nonzero mean");
  if (r.max_closure > 1e-10 * scale) r.failures.push_back("closure: sum m_i n~_i is not zero");
  if (r.hs > delta_s) r.failures.push_back("smallness: H^s norm exceeds delta_s");
  return r;
}

Eigen::SparseMatrix<double> fick_operator(const TorusGrid& grid, const std::vector<Eigen::MatrixXd>& A) {
  const int X = grid.size();
  if (static_cast<int>(A.size()) != X) throw dimension_error("fick_operator: one matrix per cell expected");
  const int N = static_cast<int>(A[0].rows());
  const double ih2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(X) * N * N * (1 + 2 * grid.dim()));
  for (int r = 0; r < X; ++r)
    for (int k = 0; k < grid.dim(); ++k) {
      const int rp = grid.shift(r, k, 1), rm = grid.shift(r, k, -1);
      const Eigen::MatrixXd Ap = 0.5 * (A[r] + A[rp]);
      const Eigen::MatrixXd Am = 0.5 * (A[r] + A[rm]);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          trip.emplace_back(r * N + i, rp * N + j, Ap(i, j) * ih2);
          trip.emplace_back(r * N + i, rm * N + j, Am(i, j) * ih2);
          trip.emplace_back(r * N + i, r * N + j, -(Ap(i, j) + Am(i, j)) * ih2);
        }
    }
  Eigen::SparseMatrix<double> D(X * N, X * N);
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

namespace {

Eigen::MatrixXd projected(const Eigen::MatrixXd& abar, const Eigen::VectorXd& nm) {
  const int N = static_cast<int>(nm.size());
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - nm * nm.transpose() / nm.squaredNorm();
  return P * abar * P;
}

}  // namespace

std::vector<Eigen::MatrixXd> cell_matrices(const ConcentrationField& field, const AbarProvider& provider,
                                           bool frozen) {
  const int X = field.grid.size();
  std::vector<Eigen::MatrixXd> A(X);
  if (frozen) {
    const Eigen::MatrixXd a =
        field.n_inf.asDiagonal() * projected(provider(field.n_inf), field.n_inf.cwiseProduct(field.m));
    std::fill(A.begin(), A.end(), a);
    return A;
  }
  for (int r = 0; r < X; ++r) {
    const Eigen::VectorXd nr = field.n.col(r);
    if ((nr.array() <= 0.0).any()) throw numerical_error("Fick solver: positivity lost");
    A[r] = nr.asDiagonal() * projected(provider(nr), nr.cwiseProduct(field.m));
  }
  return A;
}

FickSolver::FickSolver(AbarProvider provider, bool frozen) : provider_(std::move(provider)), frozen_(frozen) {}

StepInfo FickSolver::step(ConcentrationField& field, double dt) {
  if (!(dt > 0.0)) throw config_error("solver.dt must be positive");
  const int N = static_cast<int>(field.n.rows()), X = field.grid.size();
  StepInfo info;
  const Eigen::RowVectorXd mn = field.m.transpose() * field.n;
  const double C = mn.mean();
  info.closure_before = (mn.array() - C).abs().maxCoeff();

  if (!frozen_ || factored_dt_ != dt) {
    const auto A = cell_matrices(field, provider_, frozen_);
    Eigen::SparseMatrix<double> sys = fick_operator(field.grid, A) * dt;
    for (int k = 0; k < X * N; ++k) sys.coeffRef(k, k) += 1.0;
    sys.makeCompressed();
    lu_.compute(sys);
    if (lu_.info() != Eigen::Success) throw numerical_error("Fick solver: singular implicit system");
    factored_dt_ = dt;
  }
  Eigen::VectorXd rhs(X * N);
  for (int r = 0; r < X; ++r)
    for (int i = 0; i < N; ++i) rhs(r * N + i) = field.n(i, r);
  const Eigen::VectorXd sol = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success || !sol.allFinite()) throw numerical_error("Fick solver: linear solve failed");
  for (int r = 0; r < X; ++r)
    for (int i = 0; i < N; ++i) field.n(i, r) = sol(r * N + i);

  const double mm = field.m.squaredNorm();
  for (int r = 0; r < X; ++r) {
    const double e = field.m.dot(field.n.col(r)) - C;
    field.n.col(r) -= (e / mm) * field.m;
  }
  const Eigen::RowVectorXd mn2 = field.m.transpose() * field.n;
  info.closure_after = (mn2.array() - C).abs().maxCoeff();
  return info;
}

DecayReport run_fick(ConcentrationField& field, FickSolver& solver, double t_end, double dt, int s) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw config_error("solver.t_end and solver.dt must be positive");
  DecayReport rep;
  rep.s = s;
  const int N = static_cast<int>(field.n.rows());
  const Eigen::RowVectorXd mn0 = field.m.transpose() * field.n;
  const double C = mn0.mean();
  const Eigen::VectorXd mean0 = field.perturbation().rowwise().mean();
  auto record = [&](double t) {
    const Eigen::MatrixXd p = field.perturbation();
    rep.t.push_back(t);
    rep.hs.push_back(hs_norm(p, field.grid, s));
    Eigen::VectorXd l2(N);
    for (int i = 0; i < N; ++i) l2(i) = l2_norm(p.row(i), field.grid);
    rep.l2_species.push_back(l2);
    const Eigen::RowVectorXd mn = field.m.transpose() * field.n;
    rep.closure.push_back((mn.array() - C).abs().maxCoeff());
    rep.positivity.push_back(field.n.minCoeff());
    rep.max_mean_drift = std::max(rep.max_mean_drift, (p.rowwise().mean() - mean0).cwiseAbs().maxCoeff());
  };
  record(0.0);
  const int steps = static_cast<int>(std::llround(t_end / dt));
  for (int k = 1; k <= steps; ++k) {
    solver.step(field, dt);
    if (field.n.minCoeff() <= 0.0) {
      std::ostringstream os;
      os << "Fick solver: positivity lost at t = " << k * dt;
      throw numerical_error(os.str());
    }
    record(k * dt);
    const std::size_t last = rep.hs.size() - 1;
    if (rep.hs[last] > rep.hs[last - 1] * (1.0 + 1e-12) + 1e-300) rep.monotone = false;
  }
  rep.min_positivity = *std::min_element(rep.positivity.begin(), rep.positivity.end());
  rep.max_closure_drift = *std::max_element(rep.closure.begin(), rep.closure.end());
  rep.trivial = rep.hs.front() == 0.0;
  if (!rep.trivial) {
    std::vector<double> ts, ls;
    const double T = rep.t.back();
    for (std::size_t k = 0; k < rep.t.size(); ++k)
      if (rep.t[k] >= 0.5 * T && rep.hs[k] > 0.0) {
        ts.push_back(rep.t[k]);
        ls.push_back(std::log(rep.hs[k]));
      }
    if (ts.size() >= 2) {
      double st = 0, sl = 0, stt = 0, stl = 0;
      for (std::size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sl += ls[k];
        stt += ts[k] * ts[k];
        stl += ts[k] * ls[k];
      }
      const double n = static_cast<double>(ts.size());
      rep.rate = -(n * stl - st * sl) / (n * stt - st * st);
      if (rep.rate > 0.0) rep.efold_time = 1.0 / rep.rate;
    }
  }
  return rep;
}

RescalingReport rescaling_residual(const AbarProvider& abar, const Eigen::VectorXd& n_inf, const Eigen::VectorXd& m,
                                   const Eigen::VectorXd& c, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                   double alpha, double beta, double h) {
  const int N = static_cast<int>(n_inf.size());
  if (m.size() != N || c.size() != N || a.size() != N || b.size() != N)
    throw dimension_error("rescaling_residual: size mismatch");
  const double scale = std::max({c.cwiseAbs().maxCoeff(), a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-300});
  if (std::abs(m.dot(c)) > 1e-12 * scale * m.norm() || std::abs(m.dot(a)) > 1e-12 * scale * m.norm() ||
      std::abs(m.dot(b)) > 1e-12 * scale * m.norm())
    throw domain_error("rescaling_residual: manufactured field violates the closure");
  const double alpha0 = -2.0, beta0 = 0.5;
  auto nt = [&](double y) {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v(i) = c(i) + a(i) * y + 0.5 * b(i) * y * y;
    return v;
  };
  auto dnt = [&](double y) { return Eigen::VectorXd(a + b * y); };
  // Fick flux in the original frame.
  auto flux = [&](double y) {
    const Eigen::VectorXd nv = n_inf + nt(y);
    return Eigen::VectorXd(nv.asDiagonal() * (abar(nv) * dnt(y)));
  };
  const Eigen::VectorXd dt_nt = -(flux(h) - flux(-h)) / (2.0 * h);
  auto g = [&](double x) {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v(i) = nt(std::pow(n_inf(i), beta0) * x)(i);
    return v;
  };
  auto dg = [&](double x) {
    Eigen::VectorXd v(N);
    for (int i = 0; i < N; ++i) v(i) = std::pow(n_inf(i), beta0) * dnt(std::pow(n_inf(i), beta0) * x)(i);
    return v;
  };
  auto rflux = [&](double x) {
    const Eigen::VectorXd gv = g(x), dgv = dg(x);
    const Eigen::MatrixXd ab = abar(n_inf + gv);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        const double cj = std::pow(n_inf(j), -2.0 * beta);
        F(i) += std::pow(n_inf(i), 1.0 + alpha) * cj * ab(i, j) * dgv(j);
        F(i) += std::pow(n_inf(i), alpha) * cj * gv(i) * ab(i, j) * dgv(j);
      }
    return F;
  };
  RescalingReport r;
  Eigen::VectorXd dt_g(N);
  for (int i = 0; i < N; ++i) dt_g(i) = std::pow(n_inf(i), alpha0) * dt_nt(i);
  r.residual = dt_g + (rflux(h) - rflux(-h)) / (2.0 * h);
  r.max_residual = r.residual.cwiseAbs().maxCoeff();
  r.scale = dt_g.cwiseAbs().maxCoeff();
  return r;
}

KernelDriftReport kernel_drift_check(const Eigen::MatrixXd& g, const TorusGrid& grid, const Eigen::VectorXd& n_inf,
                                     const Eigen::VectorXd& m) {
  const int N = static_cast<int>(g.rows());
  if (n_inf.size() != N || m.size() != N || g.cols() != grid.size())
    throw dimension_error("kernel_drift_check: size mismatch");
  const double gmax = g.cwiseAbs().maxCoeff();
  const Eigen::RowVectorXd cl = m.transpose() * g;
  if (cl.cwiseAbs().maxCoeff() > 1e-10 * std::max(gmax, 1e-300) * m.norm())
    throw domain_error("kernel_drift_check: g violates the closure");
  KernelDriftReport rep;
  if (gmax == 0.0) return rep;
  double lhs2 = 0.0, dg2 = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    Eigen::MatrixXd X(N, grid.size()), dg(N, grid.size());
    for (int i = 0; i < N; ++i) {
      dg.row(i) = spectral_derivative(g.row(i), grid, k, 1);
      X.row(i) = dg.row(i) / n_inf(i);
    }
    dg2 += dg.squaredNorm() * grid.cell_volume();
    for (int r = 0; r < grid.size(); ++r) {
      const Eigen::VectorXd nm = (n_inf + g.col(r)).cwiseProduct(m);
      const double p = nm.dot(X.col(r));
      lhs2 += p * p / nm.squaredNorm() * grid.cell_volume();
    }
  }
  rep.lhs = std::sqrt(lhs2);
  rep.rhs = m.maxCoeff() / n_inf.minCoeff() * l2_norm(g, grid) * std::sqrt(dg2);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + 1e-6);
  return rep;
}

}  // namespace fickkin

#include "fickkin/kinetic.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>

#include "fickkin/errors.hpp"

namespace fickkin {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Multiplies the x-Fourier coefficients of every row of u (rows = velocity
// unknowns, cols = cells) by sym(row, k), k = 0..cells/2.
void apply_symbol(Eigen::MatrixXd& u, const std::function<cplx(int, int)>& sym) {
  const int rows = static_cast<int>(u.rows()), X = static_cast<int>(u.cols());
  const int K = X / 2 + 1;
  std::vector<cplx> spec(static_cast<std::size_t>(rows) * K);
  auto* out = reinterpret_cast<fftw_complex*>(spec.data());
  // Column-major storage: element (row, x) sits at row + rows * x.
  fftw_plan fwd = fftw_plan_many_dft_r2c(1, &X, rows, u.data(), nullptr, rows, 1, out, nullptr, rows, 1,
                                         FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (int k = 0; k < K; ++k)
    for (int r = 0; r < rows; ++r) spec[static_cast<std::size_t>(k) * rows + r] *= sym(r, k);
  fftw_plan bwd = fftw_plan_many_dft_c2r(1, &X, rows, out, nullptr, rows, 1, u.data(), nullptr, rows, 1, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  u /= static_cast<double>(X);
}

Eigen::VectorXd stacked_v1(const VelocityGrid& grid, int N) {
  Eigen::VectorXd v(N * grid.size());
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < grid.size(); ++q) v(i * grid.size() + q) = grid.node(q, 0);
  return v;
}

Eigen::VectorXd stacked_mu(const LinearizedOperator& op) {
  const GridFunction mu = mu_vector(op.mixture(), op.grid());
  return op.to_u(mu).cwiseQuotient(op.to_u(GridFunction::Ones(mu.rows(), mu.cols()))).eval();
}

Eigen::VectorXd stacked_scale(const LinearizedOperator& op) {
  const int N = op.mixture().species();
  return op.to_u(GridFunction::Ones(N, op.grid().size()));
}

}  // namespace

FickReference::FickReference(const Eigen::VectorXd& n_inf, const Eigen::MatrixXd& A) : n_inf_(n_inf), A_(A) {
  if (A.rows() != A.cols() || A.rows() != n_inf.size()) throw dimension_error("FickReference: shape mismatch");
  if ((n_inf.array() <= 0.0).any()) throw domain_error("FickReference: n_inf must be positive");
  // A = N abar with abar symmetric, so N^{-1/2} A N^{1/2} is symmetric.
  const Eigen::VectorXd sq = n_inf.cwiseSqrt();
  Eigen::MatrixXd As = sq.cwiseInverse().asDiagonal() * A * sq.asDiagonal();
  As = 0.5 * (As + As.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(As);
  lam_ = es.eigenvalues();
  V_ = sq.asDiagonal() * es.eigenvectors();
  Vinv_ = es.eigenvectors().transpose() * sq.cwiseInverse().asDiagonal();
}

void FickReference::add_mode(int k, const Eigen::VectorXd& sin_coef, const Eigen::VectorXd& cos_coef) {
  if (k < 1) throw config_error("FickReference: wavenumber must be positive");
  if (sin_coef.size() != n_inf_.size() || cos_coef.size() != n_inf_.size())
    throw dimension_error("FickReference: coefficient length mismatch");
  k_.push_back(k);
  s_.push_back(sin_coef);
  c_.push_back(cos_coef);
}

bool FickReference::trivial() const {
  for (std::size_t m = 0; m < k_.size(); ++m)
    if (s_[m].norm() + c_[m].norm() > 0.0) return false;
  return true;
}

Eigen::MatrixXd FickReference::propagator(int k, double t) const {
  const double kk = kTwoPi * k * kTwoPi * k;
  const Eigen::VectorXd e = (kk * t * lam_).array().exp();
  return V_ * e.asDiagonal() * Vinv_;
}

void FickReference::coefficients(std::size_t m, double t, Eigen::VectorXd& s, Eigen::VectorXd& c) const {
  const Eigen::MatrixXd P = propagator(k_[m], t);
  s = P * s_[m];
  c = P * c_[m];
}

Eigen::MatrixXd FickReference::value(double t, const TorusGrid& grid) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_inf_.size(), grid.size());
  Eigen::VectorXd s, c;
  for (std::size_t m = 0; m < k_.size(); ++m) {
    coefficients(m, t, s, c);
    for (int r = 0; r < grid.size(); ++r) {
      const double th = kTwoPi * k_[m] * grid.coord(r, 0);
      out.col(r) += s * std::sin(th) + c * std::cos(th);
    }
  }
  return out;
}

Eigen::MatrixXd FickReference::dx(double t, const TorusGrid& grid) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_inf_.size(), grid.size());
  Eigen::VectorXd s, c;
  for (std::size_t m = 0; m < k_.size(); ++m) {
    coefficients(m, t, s, c);
    const double w = kTwoPi * k_[m];
    for (int r = 0; r < grid.size(); ++r) {
      const double th = w * grid.coord(r, 0);
      out.col(r) += w * (s * std::cos(th) - c * std::sin(th));
    }
  }
  return out;
}

Eigen::MatrixXd FickReference::dt(double t, const TorusGrid& grid) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_inf_.size(), grid.size());
  Eigen::VectorXd s, c;
  for (std::size_t m = 0; m < k_.size(); ++m) {
    coefficients(m, t, s, c);
    const double kk = kTwoPi * k_[m] * kTwoPi * k_[m];
    // d_t n~ = -A d_xx n~ = (2 pi k)^2 A n~ on each mode.
    const Eigen::VectorXd as = kk * (A_ * s), ac = kk * (A_ * c);
    for (int r = 0; r < grid.size(); ++r) {
      const double th = kTwoPi * k_[m] * grid.coord(r, 0);
      out.col(r) += as * std::sin(th) + ac * std::cos(th);
    }
  }
  return out;
}

Eigen::MatrixXd build_source(const Eigen::MatrixXd& nt, const Eigen::MatrixXd& nx, double eps,
                             const LinearizedOperator& op) {
  const int N = op.mixture().species();
  const int Q = op.grid().size();
  if (nt.rows() != N || nx.rows() != N || nt.cols() != nx.cols())
    throw dimension_error("build_source: derivative data has the wrong shape");
  if (!(eps > 0.0)) throw config_error("build_source: eps must be positive");
  const Eigen::VectorXd mu = stacked_mu(op), scale = stacked_scale(op), v1 = stacked_v1(op.grid(), N);
  Eigen::MatrixXd S(N * Q, nt.cols());
  for (int r = 0; r < nt.cols(); ++r)
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < Q; ++q) {
        const int row = i * Q + q;
        S(row, r) = scale(row) * mu(row) * (nt(i, r) + v1(row) * nx(i, r) / eps);
      }
  return S;
}

Eigen::MatrixXd build_source(const FickReference& ref, double eps, double t, const LinearizedOperator& op,
                             const TorusGrid& grid) {
  if (ref.n_inf().size() != op.mixture().species()) throw dimension_error("build_source: species mismatch");
  return build_source(ref.dt(t, grid), ref.dx(t, grid), eps, op);
}

namespace {

double max_pi_ratio(const Eigen::MatrixXd& S, const Eigen::MatrixXd& U) {
  double ratio = 0.0;
  for (int r = 0; r < S.cols(); ++r) {
    const double sn = S.col(r).norm();
    if (sn > 0.0) ratio = std::max(ratio, (U * (U.transpose() * S.col(r))).norm() / sn);
  }
  return ratio;
}

void push_sample(SourceReport& rep, double t, double ratio, double control, double& prev) {
  if (prev >= 0.0 && control > prev * (1.0 + 1e-12) + 1e-300) rep.control_decreasing = false;
  prev = control;
  rep.t.push_back(t);
  rep.pi_ratio.push_back(ratio);
  rep.fluid_control.push_back(control);
  rep.max_pi_ratio = std::max(rep.max_pi_ratio, ratio);
}

}  // namespace

SourceReport source_structure(const FickReference& ref, double eps, const LinearizedOperator& op,
                              const TorusGrid& grid, const std::vector<double>& times, int s) {
  SourceReport rep;
  rep.trivial = ref.trivial();
  double prev = -1.0;
  for (double t : times) {
    const double control = eps * hs_norm(ref.dt(t, grid), grid, s) + hs_norm(ref.dx(t, grid), grid, s);
    push_sample(rep, t, max_pi_ratio(build_source(ref, eps, t, op, grid), op.basis_u()), control, prev);
  }
  return rep;
}

SourceReport source_structure_run(ConcentrationField field, FickSolver& solver, const FickAssembly& fa, double eps,
                                  const LinearizedOperator& op, double t_end, double dt, int samples, int s) {
  if (field.grid.dim() != 1) throw config_error("source_structure_run needs a 1-D torus");
  if (samples < 2) throw config_error("source_structure_run needs at least 2 samples");
  const Eigen::MatrixXd A = fa.n.asDiagonal() * fa.abar;
  const int N = static_cast<int>(field.n.rows());
  SourceReport rep;
  rep.trivial = field.perturbation().cwiseAbs().maxCoeff() == 0.0;
  const long steps = std::max<long>(1, std::lround(t_end / dt));
  const long every = std::max<long>(1, steps / (samples - 1));
  double prev = -1.0, t = 0.0;
  for (long k = 0; k <= steps; ++k) {
    if (k % every == 0 || k == steps) {
      const Eigen::MatrixXd g = field.perturbation();
      Eigen::MatrixXd nx(N, g.cols());
      for (int i = 0; i < N; ++i) nx.row(i) = spectral_derivative(g.row(i), field.grid, 0, 1);
      const Eigen::MatrixXd flux = A * nx;
      Eigen::MatrixXd nt(N, g.cols());
      for (int i = 0; i < N; ++i) nt.row(i) = -spectral_derivative(flux.row(i), field.grid, 0, 1);
      const double control = eps * hs_norm(nt, field.grid, s) + hs_norm(nx, field.grid, s);
      push_sample(rep, t, max_pi_ratio(build_source(nt, nx, eps, op), op.basis_u()), control, prev);
    }
    if (k == steps) break;
    solver.step(field, dt);
    t += dt;
  }
  return rep;
}

KineticSimulator::KineticSimulator(const LinearizedOperator& op, const FickAssembly& fa, const FickReference& ref,
                                   double eps, int cells, bool source_on)
    : op_(&op), fa_(&fa), ref_(&ref), eps_(eps), space_(1, cells), source_on_(source_on) {
  if (!(eps > 0.0)) throw config_error("kinetic: eps must be positive");
  if (cells % 2) throw config_error("kinetic: cell count must be even");
  if ((fa.n - op.n()).norm() > 1e-12 * op.n().norm() || (ref.n_inf() - op.n()).norm() > 1e-12 * op.n().norm())
    throw config_error("kinetic: operator, Fick matrix and reference use different n_inf");
  const int N = op.mixture().species();
  scale_ = stacked_scale(op);
  flux_w_.resize(op.size());
  const VelocityGrid& g = op.grid();
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < g.size(); ++q) {
      const int row = i * g.size() + q;
      flux_w_(row) = g.weight(q) * g.node(q, 0) / scale_(row);
    }
  u_ = Eigen::MatrixXd::Zero(op.size(), cells);
}

void KineticSimulator::set_state(const Eigen::MatrixXd& u, double t) {
  if (u.rows() != u_.rows() || u.cols() != u_.cols()) throw dimension_error("kinetic: state shape mismatch");
  u_ = u;
  t_ = t;
}

void KineticSimulator::set_uniform(const GridFunction& f, double t) {
  const Eigen::VectorXd col = op_->to_u(f);
  u_ = col.replicate(1, space_.size());
  t_ = t;
}

void KineticSimulator::set_well_prepared() {
  const int N = op_->mixture().species();
  const Eigen::MatrixXd nx = ref_->dx(0.0, space_);
  Eigen::MatrixXd Y(op_->size(), N);
  for (int j = 0; j < N; ++j) Y.col(j) = op_->to_u(fa_->linv_x[j]);
  u_ = eps_ * Y * nx;
  t_ = 0.0;
}

void KineticSimulator::transport(double dt) {
  const int Q = op_->grid().size();
  const double shift = kTwoPi * dt / eps_;
  const int X = space_.cells();
  apply_symbol(u_, [&](int row, int k) {
    const double th = shift * k * op_->grid().node(row % Q, 0);
    if (2 * k == X) return cplx(std::cos(th), 0.0);
    return std::polar(1.0, -th);
  });
}

void KineticSimulator::collide(double dt) {
  const Spectrum& sp = op_->spectrum();
  const double h = dt / (eps_ * eps_);
  Eigen::MatrixXd rhs = u_;
  if (source_on_) rhs -= dt * build_source(*ref_, eps_, t_ + dt, *op_, space_);
  const Eigen::VectorXd damp = (1.0 - h * sp.eigenvalues.array()).cwiseInverse();
  u_ = sp.vectors * (damp.asDiagonal() * (sp.vectors.transpose() * rhs));
}

void KineticSimulator::step(double dt) {
  if (!(dt > 0.0)) throw config_error("kinetic: dt must be positive");
  transport(dt);
  collide(dt);
  t_ += dt;
}

Eigen::MatrixXd KineticSimulator::scaled_flux() const {
  const int N = op_->mixture().species();
  const int Q = op_->grid().size();
  Eigen::MatrixXd J(N, space_.size());
  for (int i = 0; i < N; ++i) J.row(i) = flux_w_.segment(i * Q, Q).transpose() * u_.middleRows(i * Q, Q) / eps_;
  return J;
}

double KineticSimulator::flux_error() const {
  const Eigen::MatrixXd target = ref_->A() * ref_->dx(t_, space_);
  return fickkin::l2_norm(scaled_flux() - target, space_);
}

double KineticSimulator::l2_norm() const { return std::sqrt(u_.squaredNorm() * space_.cell_volume()); }

SurrogateNorm KineticSimulator::surrogate() const {
  const int N = op_->mixture().species();
  const VelocityGrid& g = op_->grid();
  const int Q = g.size();
  const Eigen::VectorXd& n = op_->n();
  const double h = space_.cell_volume();
  SurrogateNorm s;
  // ||f||^2_{mu^{-1/2}} = sum n_i u^2 in these coordinates.
  Eigen::VectorXd rw(op_->size());
  for (int i = 0; i < N; ++i) rw.segment(i * Q, Q).setConstant(n(i));
  s.l2 = h * (rw.asDiagonal() * u_.cwiseAbs2()).sum();
  Eigen::MatrixXd ux = u_;
  const int X = space_.cells();
  apply_symbol(ux, [&](int, int k) {
    if (2 * k == X) return cplx(0.0, 0.0);
    return cplx(0.0, kTwoPi * k);
  });
  s.dx = h * (rw.asDiagonal() * ux.cwiseAbs2()).sum();

  const Eigen::VectorXd mu = stacked_mu(*op_);
  const int mv = g.mv();
  const double dv = g.spacing();
  double acc = 0.0;
  for (int r = 0; r < u_.cols(); ++r)
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < Q; ++q) {
        const int row = i * Q + q;
        for (int k = 0; k < g.dim(); ++k) {
          const int stride = k == 0 ? 1 : mv;
          const int idx = k == 0 ? q % mv : q / mv;
          auto f = [&](int qq) { return u_(i * Q + qq, r) / scale_(i * Q + qq); };
          double d;
          if (idx == 0)
            d = (f(q + stride) - f(q)) / dv;
          else if (idx == mv - 1)
            d = (f(q) - f(q - stride)) / dv;
          else
            d = (f(q + stride) - f(q - stride)) / (2.0 * dv);
          acc += g.weight(q) * d * d / mu(row);
        }
      }
  s.dv = eps_ * eps_ * h * acc;
  return s;
}

Trajectory KineticSimulator::run(double t_end, double dt, int sample_every) {
  if (!(dt > 0.0)) throw config_error("kinetic: dt must be positive");
  if (sample_every < 1) sample_every = 1;
  Trajectory tr;
  const double span = t_end - t_;
  const long steps = span > 0.0 ? std::max<long>(1, std::lround(std::ceil(span / dt - 1e-9))) : 0;
  const double h = steps > 0 ? span / steps : dt;
  auto sample = [&] {
    const SurrogateNorm sn = surrogate();
    tr.t.push_back(t_);
    tr.surrogate.push_back(sn.total());
    tr.parts.push_back(sn);
    tr.flux_error.push_back(flux_error());
    tr.l2.push_back(l2_norm());
    tr.sup_flux_error = std::max(tr.sup_flux_error, tr.flux_error.back());
  };
  sample();
  tr.initial_surrogate = tr.surrogate.front();
  for (long s = 1; s <= steps; ++s) {
    step(h);
    if (!u_.allFinite()) throw numerical_error("kinetic: state became non-finite");
    if (s % sample_every == 0 || s == steps) {
      sample();
      if (tr.initial_surrogate > 0.0 && tr.surrogate.back() > 10.0 * tr.initial_surrogate)
        throw numerical_error("kinetic: surrogate norm exceeded 10x its initial value at t = " + std::to_string(t_) +
                              " (eps = " + std::to_string(eps_) + ")");
    }
  }
  for (double v : tr.surrogate)
    if (tr.initial_surrogate > 0.0) tr.max_surrogate_ratio = std::max(tr.max_surrogate_ratio, v / tr.initial_surrogate);
  return tr;
}

double Trajectory::sup_flux_error_after(double t_from) const {
  double m = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t[k] >= t_from) m = std::max(m, flux_error[k]);
  return m;
}

EpsStudy eps_convergence_study(const LinearizedOperator& op, const FickAssembly& fa, const FickReference& ref,
                               const std::vector<double>& eps, double t_end, int cells, double dt_factor,
                               bool well_prepared) {
  if (eps.size() < 3) throw config_error("eps study needs at least 3 values");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0.0)) throw config_error("eps values must be positive");
    if (k > 0 && !(eps[k] < eps[k - 1])) throw config_error("eps values must be strictly decreasing");
  }
  if (!(t_end > 0.0) || !(dt_factor > 0.0)) throw config_error("eps study: t_end and dt_factor must be positive");
  EpsStudy st;
  st.eps = eps;
  st.degenerate = ref.trivial();
  st.well_prepared = well_prepared;
  for (double e : eps) {
    KineticSimulator sim(op, fa, ref, e, cells);
    if (well_prepared) sim.set_well_prepared();
    const double dt = dt_factor * e * e;
    Trajectory tr = sim.run(t_end, dt, std::max(1, static_cast<int>(t_end / dt / 40)));
    st.flux_error.push_back(well_prepared ? tr.sup_flux_error : tr.sup_flux_error_after(0.25 * t_end));
    st.stability.push_back(tr.max_surrogate_ratio);
    st.runs.push_back(std::move(tr));
  }
  for (std::size_t k = 1; k < eps.size(); ++k)
    if (st.flux_error[k] >= st.flux_error[k - 1]) st.monotone = false;
  const bool positive = std::all_of(st.flux_error.begin(), st.flux_error.end(), [](double v) { return v > 0.0; });
  if (positive && !st.degenerate)
    st.order = loglog_slope(eps, st.flux_error);
  else
    st.degenerate = true;
  return st;
}

}  // namespace fickkin

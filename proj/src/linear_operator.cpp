#include "fickkin/linear_operator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

namespace {

struct Entry {
  int idx;  // stacked index i * Q + q
  int species;
  double c;
};

double v2_of(const double* v, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += v[k] * v[k];
  return s;
}

}  // namespace

OperatorBlocks assemble_blocks(const CollisionStencil& stencil) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mixture& mix = stencil.mixture();
  const VelocityGrid& grid = stencil.grid();
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count();
  const int NQ = N * Q;
  OperatorBlocks out;
  out.species = N;
  out.nodes = Q;
  out.stencil_hash = stencil.hash();
  out.mono.assign(N, Eigen::MatrixXd::Zero(NQ, NQ));
  out.bi.assign(N, Eigen::MatrixXd::Zero(NQ, NQ));

  Eigen::MatrixXd lmu(N, Q);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < Q; ++q) lmu(i, q) = log_mu(mix, i, grid.node(q));
  Eigen::VectorXd inv_sqrt_w = grid.weights().cwiseSqrt().cwiseInverse();

  // (i,j,q,p,a) and (j,i,p,q,-sigma) give the same event: visit i < j once with
  // weight 2, and i == j over half of the angular nodes with weight 2.
  const bool halve = A % 2 == 0;
  CollisionEvent e;
  Entry ent[10];
  for (int i = 0; i < N; ++i)
    for (int j = halve ? i : 0; j < N; ++j) {
      const int a_end = (i == j && halve) ? A / 2 : A;
      const double mult = halve ? 2.0 : 1.0;
      for (int q = 0; q < Q; ++q)
        for (int p = 0; p < Q; ++p) {
          const double half_log = 0.5 * (lmu(i, q) + lmu(j, p));
          for (int a = 0; a < a_end; ++a) {
            if (!stencil.event(i, j, q, p, a, e)) continue;
            const double K = mult * 0.25 * grid.weight(q) * e.weight;
            if (K == 0.0) continue;
            int ne = 0;
            for (int c = 0; c < e.vp.count; ++c) {
              const int r = e.vp.idx[c];
              if (e.vp.w[c] == 0.0) continue;
              ent[ne++] = {i * Q + r, i, e.vp.w[c] * std::exp(half_log - 0.5 * lmu(i, r)) * inv_sqrt_w(r)};
            }
            for (int c = 0; c < e.vsp.count; ++c) {
              const int s = e.vsp.idx[c];
              if (e.vsp.w[c] == 0.0) continue;
              ent[ne++] = {j * Q + s, j, e.vsp.w[c] * std::exp(half_log - 0.5 * lmu(j, s)) * inv_sqrt_w(s)};
            }
            ent[ne++] = {i * Q + q, i, -std::exp(half_log - 0.5 * lmu(i, q)) * inv_sqrt_w(q)};
            ent[ne++] = {j * Q + p, j, -std::exp(half_log - 0.5 * lmu(j, p)) * inv_sqrt_w(p)};
            if (i == j) {
              double* T = out.mono[i].data();
              for (int x = 0; x < ne; ++x) {
                const double cx = -K * ent[x].c;
                for (int y = 0; y < ne; ++y) T[static_cast<std::size_t>(ent[y].idx) * NQ + ent[x].idx] += cx * ent[y].c;
              }
            } else {
              for (int x = 0; x < ne; ++x) {
                const double cx = -K * ent[x].c;
                for (int y = 0; y < ne; ++y) {
                  int bucket;
                  if (ent[x].species != ent[y].species)
                    bucket = ent[x].species;
                  else
                    bucket = ent[x].species == i ? j : i;
                  out.bi[bucket].data()[static_cast<std::size_t>(ent[y].idx) * NQ + ent[x].idx] += cx * ent[y].c;
                }
              }
            }
          }
        }
    }
  out.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace {
constexpr char kOperatorMagic[6] = {'F', 'I', 'C', 'K', 'L', '1'};

template <class T>
void put(std::ostream& os, const T& x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof x);
}
template <class T>
bool get(std::istream& is, T& x) {
  is.read(reinterpret_cast<char*>(&x), sizeof x);
  return static_cast<bool>(is);
}
}  // namespace

void save_blocks(const OperatorBlocks& b, const Mixture& mix, const VelocityGrid& grid, const Eigen::VectorXd& n,
                 const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot write operator cache " + path);
  os.write(kOperatorMagic, 6);
  put(os, static_cast<std::int32_t>(b.species));
  put(os, static_cast<std::int32_t>(b.nodes));
  put(os, static_cast<std::int32_t>(grid.dim()));
  put(os, static_cast<std::int32_t>(grid.mv()));
  put(os, grid.rv());
  put(os, static_cast<std::int32_t>(grid.angular_count()));
  put(os, mix.hash());
  for (int i = 0; i < b.species; ++i) put(os, i < n.size() ? n(i) : 0.0);
  put(os, b.stencil_hash);
  put(os, b.build_seconds);
  const std::size_t bytes = static_cast<std::size_t>(b.size()) * b.size() * sizeof(double);
  for (const auto& m : b.mono) os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(bytes));
  for (const auto& m : b.bi) os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(bytes));
  if (!os) throw config_error("failed writing operator cache " + path);
}

bool load_blocks(OperatorBlocks& b, const Mixture& mix, const VelocityGrid& grid, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[6];
  is.read(magic, 6);
  if (!is || std::memcmp(magic, kOperatorMagic, 6) != 0) return false;
  std::int32_t N = 0, Q = 0, d = 0, mv = 0, ang = 0;
  double rv = 0.0;
  std::uint64_t mh = 0;
  if (!get(is, N) || !get(is, Q) || !get(is, d) || !get(is, mv) || !get(is, rv) || !get(is, ang) || !get(is, mh))
    return false;
  if (N != mix.species() || Q != grid.size() || d != grid.dim() || mv != grid.mv() || rv != grid.rv() ||
      ang != grid.angular_count())
    return false;
  if (mh != mix.hash()) throw config_error("operator cache " + path + " belongs to a different mixture");
  for (int i = 0; i < N; ++i) {
    double ni;
    if (!get(is, ni)) return false;
  }
  OperatorBlocks tmp;
  tmp.species = N;
  tmp.nodes = Q;
  if (!get(is, tmp.stencil_hash) || !get(is, tmp.build_seconds)) return false;
  const int NQ = N * Q;
  const std::size_t bytes = static_cast<std::size_t>(NQ) * NQ * sizeof(double);
  for (int pass = 0; pass < 2; ++pass) {
    auto& dst = pass == 0 ? tmp.mono : tmp.bi;
    for (int k = 0; k < N; ++k) {
      Eigen::MatrixXd m(NQ, NQ);
      is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(bytes));
      if (!is) return false;
      dst.push_back(std::move(m));
    }
  }
  b = std::move(tmp);
  return true;
}

std::vector<GridFunction> kernel_basis(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                       bool quadrature) {
  require_positive(mix, n);
  const int N = mix.species(), Q = grid.size(), d = grid.dim();
  const GridFunction M = maxwellian_vector(mix, n, grid);
  const auto sc = mixture_scalars(mix, n);
  std::vector<GridFunction> out;
  for (int k = 0; k < N; ++k) {
    GridFunction phi = GridFunction::Zero(N, Q);
    phi.row(k) = M.row(k);
    const double norm2 = quadrature ? integrate(M.row(k), grid) : n(k);
    out.push_back(phi / std::sqrt(norm2));
  }
  for (int l = 0; l < d; ++l) {
    GridFunction phi(N, Q);
    double norm2 = 0.0;
    for (int i = 0; i < N; ++i) {
      for (int q = 0; q < Q; ++q) phi(i, q) = grid.node(q, l) * mix.mass(i) * M(i, q);
      if (quadrature) {
        double s = 0.0;
        for (int q = 0; q < Q; ++q) s += grid.weight(q) * grid.node(q, l) * grid.node(q, l) * M(i, q);
        norm2 += mix.mass(i) * mix.mass(i) * s;
      }
    }
    if (!quadrature) norm2 = sc.rho_inf;
    out.push_back(phi / std::sqrt(norm2));
  }
  GridFunction phi(N, Q);
  double norm2 = 0.0;
  for (int i = 0; i < N; ++i) {
    double offset = d / mix.mass(i);
    if (quadrature) {
      double m0 = 0.0, m2 = 0.0;
      for (int q = 0; q < Q; ++q) {
        m0 += grid.weight(q) * M(i, q);
        m2 += grid.weight(q) * v2_of(grid.node(q), d) * M(i, q);
      }
      offset = m2 / m0;
    }
    for (int q = 0; q < Q; ++q) phi(i, q) = (v2_of(grid.node(q), d) - offset) * mix.mass(i) * M(i, q);
    if (quadrature) {
      double s = 0.0;
      for (int q = 0; q < Q; ++q) {
        const double e = v2_of(grid.node(q), d) - offset;
        s += grid.weight(q) * e * e * M(i, q);
      }
      norm2 += mix.mass(i) * mix.mass(i) * s;
    }
  }
  if (!quadrature) {
    phi /= std::sqrt(2.0 * d);
    norm2 = sc.c_inf;
  }
  out.push_back(phi / std::sqrt(norm2));
  return out;
}

double gram_defect(const std::vector<GridFunction>& basis, const GridFunction& M, const VelocityGrid& grid) {
  double worst = 0.0;
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (std::size_t l = 0; l < basis.size(); ++l) {
      const double g = weighted_inner(basis[k], basis[l], M, grid);
      worst = std::max(worst, std::abs(g - (k == l ? 1.0 : 0.0)));
    }
  return worst;
}

namespace {

// Largest |eigenvalue| of a symmetric matrix by power iteration on S^2.
double sym_norm(const Eigen::MatrixXd& S) {
  const int n = static_cast<int>(S.rows());
  if (n == 0) return 0.0;
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x(k) = 1.0 + 0.5 * std::sin(1.3 * k + 0.7);
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < 400; ++it) {
    Eigen::VectorXd y = S * x;
    const double ny = y.norm();
    if (ny == 0.0) return 0.0;
    const double prev = est;
    est = ny;
    x = y / ny;
    if (it > 20 && std::abs(est - prev) <= 1e-13 * est) break;
  }
  return std::abs(x.dot(S * x));
}

}  // namespace

LinearizedOperator::LinearizedOperator(const OperatorBlocks& blocks, const Mixture& mix, const VelocityGrid& grid,
                                       const Eigen::VectorXd& n)
    : blocks_(&blocks), mix_(&mix), grid_(&grid), n_(n) {
  require_positive(mix, n);
  const int N = mix.species(), Q = grid.size();
  if (blocks.species != N || blocks.nodes != Q) throw dimension_error("operator blocks do not match the grid");
  M_ = maxwellian_vector(mix, n, grid);
  scale_.resize(N * Q);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < Q; ++q) scale_(i * Q + q) = std::sqrt(grid.weight(q) / M_(i, q));

  phi_ = kernel_basis(mix, n, grid, true);
  analytic_gram_defect_ = gram_defect(kernel_basis(mix, n, grid, false), M_, grid);
  U_.resize(N * Q, static_cast<Eigen::Index>(phi_.size()));
  for (std::size_t k = 0; k < phi_.size(); ++k) U_.col(static_cast<Eigen::Index>(k)) = to_u(phi_[k]);

  std::vector<Eigen::MatrixXd> all;
  for (const auto& m : blocks.mono) all.push_back(m);
  for (const auto& m : blocks.bi) all.push_back(m);
  Eigen::MatrixXd raw = combine(all);
  const double raw_norm = sym_norm(raw);
  raw_kernel_residual_ = 0.0;
  if (raw_norm > 0.0)
    for (Eigen::Index k = 0; k < U_.cols(); ++k)
      raw_kernel_residual_ = std::max(raw_kernel_residual_, (raw * U_.col(k)).norm() / raw_norm);

  // S = (I - U U^T) raw (I - U U^T)
  const Eigen::MatrixXd RU = raw * U_;
  const Eigen::MatrixXd UtRU = U_.transpose() * RU;
  S_ = raw;
  S_.noalias() -= RU * U_.transpose();
  S_.noalias() -= U_ * RU.transpose();
  S_.noalias() += U_ * (UtRU * U_.transpose());
  S_ = 0.5 * (S_ + S_.transpose()).eval();
  norm_ = sym_norm(S_);

  Eigen::MatrixXd K = -S_;
  K.noalias() += norm_ * U_ * U_.transpose();
  chol_.compute(K);
  if (chol_.info() != Eigen::Success)
    throw numerical_error("linearized operator is not negative definite off its kernel (grid too coarse?)");
}

Eigen::MatrixXd LinearizedOperator::combine(const std::vector<Eigen::MatrixXd>& parts) const {
  const int N = mix_->species(), Q = grid_->size(), NQ = N * Q;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(NQ, NQ);
  for (std::size_t p = 0; p < parts.size(); ++p) out += n_(static_cast<int>(p) % N) * parts[p];
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      if (a != b) out.block(a * Q, b * Q, Q, Q) *= std::sqrt(n_(b) / n_(a));
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd LinearizedOperator::mono_part() const { return combine(blocks_->mono); }
Eigen::MatrixXd LinearizedOperator::bi_part() const { return combine(blocks_->bi); }

Eigen::VectorXd LinearizedOperator::to_u(const GridFunction& f) const {
  const int N = mix_->species(), Q = grid_->size();
  if (f.rows() != N || f.cols() != Q) throw dimension_error("grid function must be N x Q_v");
  Eigen::VectorXd u(N * Q);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < Q; ++q) u(i * Q + q) = scale_(i * Q + q) * f(i, q);
  return u;
}

GridFunction LinearizedOperator::from_u(const Eigen::VectorXd& u) const {
  const int N = mix_->species(), Q = grid_->size();
  if (u.size() != N * Q) throw dimension_error("vector length must be N * Q_v");
  GridFunction f(N, Q);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < Q; ++q) f(i, q) = u(i * Q + q) / scale_(i * Q + q);
  return f;
}

GridFunction LinearizedOperator::apply(const GridFunction& f) const { return from_u(S_ * to_u(f)); }

GridFunction LinearizedOperator::project(const GridFunction& f) const {
  const Eigen::VectorXd u = to_u(f);
  return from_u(U_ * (U_.transpose() * u));
}

double LinearizedOperator::inner(const GridFunction& f, const GridFunction& g) const { return to_u(f).dot(to_u(g)); }
double LinearizedOperator::norm(const GridFunction& f) const { return to_u(f).norm(); }

Eigen::VectorXd LinearizedOperator::solve_u(const Eigen::VectorXd& rhs, bool strict) const {
  if (rhs.size() != size()) throw dimension_error("solve: rhs has wrong length");
  Eigen::VectorXd x = rhs;
  const Eigen::VectorXd c = U_.transpose() * x;
  const double rn = x.norm();
  if (rn == 0.0) return Eigen::VectorXd::Zero(size());
  if (c.norm() > 1e-8 * rn) {
    if (strict) throw domain_error("solve: right-hand side has a component in Ker(L)");
  }
  x -= U_ * c;
  Eigen::VectorXd y = -chol_.solve(x);
  const Eigen::VectorXd r = x - S_ * y;
  y -= chol_.solve(r);
  y -= U_ * (U_.transpose() * y);
  return y;
}

GridFunction LinearizedOperator::solve(const GridFunction& rhs, bool strict) const {
  return from_u(solve_u(to_u(rhs), strict));
}

const Spectrum& LinearizedOperator::spectrum() const {
  if (spectrum_) return *spectrum_;
  auto sp = std::make_unique<Spectrum>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S_);
  if (es.info() != Eigen::Success) throw numerical_error("eigensolver failed on the linearized operator");
  sp->eigenvalues = es.eigenvalues();
  sp->vectors = es.eigenvectors();
  const double scale = sp->eigenvalues.cwiseAbs().maxCoeff();
  const double tol = 1e-8 * scale;
  std::vector<int> null_idx;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < sp->eigenvalues.size(); ++k) {
    const double l = sp->eigenvalues(k);
    if (std::abs(l) <= tol)
      null_idx.push_back(static_cast<int>(k));
    else
      gap = std::min(gap, -l);
  }
  sp->near_zero = static_cast<int>(null_idx.size());
  sp->lambda_num = gap;
  if (sp->near_zero > kernel_dim())
    throw structural_error("spectral degeneracy: " + std::to_string(sp->near_zero) +
                           " near-zero eigenvalues, expected " + std::to_string(kernel_dim()));
  if (!null_idx.empty()) {
    Eigen::MatrixXd V0(size(), static_cast<Eigen::Index>(null_idx.size()));
    for (std::size_t k = 0; k < null_idx.size(); ++k) V0.col(static_cast<Eigen::Index>(k)) = sp->vectors.col(null_idx[k]);
    const Eigen::MatrixXd R = V0 - U_ * (U_.transpose() * V0);
    sp->principal_angle = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues()(0);
  }
  spectrum_ = std::move(sp);
  return *spectrum_;
}

std::uint64_t LinearizedOperator::hash() const {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(blocks_->stencil_hash));
  for (int i = 0; i < n_.size(); ++i) h.add(n_(i));
  return h.value();
}

CollisionFrequency collision_frequency(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid) {
  require_positive(mix, n);
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count(), d = grid.dim();
  const GridFunction M = maxwellian_vector(mix, n, grid);
  CollisionFrequency out;
  out.nu = GridFunction::Zero(N, Q);
  // Angular integral of b and the kinetic part depend only on |v - v_p| and the direction.
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      GridFunction row = GridFunction::Zero(1, Q);
      for (int q = 0; q < Q; ++q) {
        double acc = 0.0;
        for (int p = 0; p < Q; ++p) {
          double g2 = 0.0;
          double rel[2] = {0.0, 0.0};
          for (int k = 0; k < d; ++k) {
            rel[k] = grid.node(q, k) - grid.node(p, k);
            g2 += rel[k] * rel[k];
          }
          const double g = std::sqrt(g2);
          double ang = 0.0;
          for (int a = 0; a < A; ++a) {
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += rel[k] * grid.sigma(a)[k];
            ang += grid.angular_weight(a) * mix.kernel(i, j, g, g > 0.0 ? dot / g : 1.0);
          }
          acc += grid.weight(p) * ang * M(j, p);
        }
        row(0, q) = acc;
      }
      out.nu.row(i) += row;
      out.nu_ij.push_back(row);
    }
  out.nu_min = out.nu.minCoeff();
  return out;
}

double lambda0(double c_phi, double c_b, double r) { return c_phi * c_b * std::exp(-4.0 * r * r) / 96.0; }

double Lambda_quadrature(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid) {
  require_positive(mix, n);
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count(), d = grid.dim();
  const GridFunction M = maxwellian_vector(mix, n, grid);
  double best = std::numeric_limits<double>::infinity();
  double vp[2], vsp[2];
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int q = 0; q < Q; ++q)
        for (int p = 0; p < Q; ++p) {
          const double* v = grid.node(q);
          const double* vs = grid.node(p);
          double g2 = 0.0;
          for (int k = 0; k < d; ++k) g2 += (v[k] - vs[k]) * (v[k] - vs[k]);
          const double g = std::sqrt(g2);
          const double base = grid.weight(q) * grid.weight(p) * mix.mass(i) * mix.mass(i) * M(i, q) * M(j, p);
          for (int a = 0; a < A; ++a) {
            const double* s = grid.sigma(a);
            precollisional(mix.mass(i), mix.mass(j), v, vs, s, d, vp, vsp);
            double dot = 0.0, dv2 = 0.0;
            for (int k = 0; k < d; ++k) {
              dot += (v[k] - vs[k]) * s[k];
              dv2 += (v[k] - vp[k]) * (v[k] - vp[k]);
            }
            const double de = v2_of(vp, d) - v2_of(v, d);
            const double B = mix.kernel(i, j, g, g > 0.0 ? dot / g : 1.0);
            acc += grid.angular_weight(a) * base * B * std::min(dv2 / 3.0, de * de);
          }
        }
      best = std::min(best, 0.25 * acc);
    }
  return best;
}

SpectralConstants explicit_constants(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                     const SpectralInputs& in, const LinearizedOperator* op) {
  require_positive(mix, n);
  if (!(in.c2 > 0.0)) throw config_error("constants.c2 must be positive");
  const int N = mix.species();
  SpectralConstants c;
  c.C_2 = in.c2;
  const auto sc = mixture_scalars(mix, n);
  c.c_inf = sc.c_inf;
  c.rho_inf = sc.rho_inf;
  c.c_b = angular_cb(mix);
  for (int i = 0; i < N; ++i) {
    const double cphi = i < static_cast<int>(in.c_phi.size()) ? in.c_phi[i] : mix.c_phi()(i, i);
    const double cb = i < static_cast<int>(in.c_b.size()) ? in.c_b[i] : c.c_b;
    const double r = i < static_cast<int>(in.r.size()) ? in.r[i] : 1.0;
    if (!(cphi > 0.0) || !(cb > 0.0) || !(r > 0.0)) throw config_error("spectral inputs must be positive");
    c.lambda0.push_back(lambda0(cphi, cb, r));
    c.lambda_i.push_back(c.lambda0.back() / std::pow(mix.mass(i), mix.gamma() / 2.0));
  }
  c.Lambda = Lambda_quadrature(mix, n, grid);
  c.nu_min = collision_frequency(mix, n, grid).nu_min;
  const double X = std::max(sc.rho_inf, 6.0 * sc.c_inf);
  const double lmin = *std::min_element(c.lambda_i.begin(), c.lambda_i.end());
  c.eta0 = std::min(1.0, 10.0 * N * lmin * X / (in.c2 + 40.0 * N * X * c.nu_min));
  c.lambda_L = c.Lambda * c.eta0 / (20.0 * N * X);
  if (op) {
    c.C_L = op->op_norm();
    c.C_0 = c.C_L / n.maxCoeff();
    c.lambda_num = op->spectrum().lambda_num;
  }
  return c;
}

}  // namespace fickkin

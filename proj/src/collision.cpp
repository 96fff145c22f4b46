#include "fickkin/collision.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

void precollisional(double mi, double mj, const double* v, const double* vs, const double* sigma, int d,
                    double* vp, double* vsp) {
  double g2 = 0.0;
  for (int k = 0; k < d; ++k) g2 += (v[k] - vs[k]) * (v[k] - vs[k]);
  const double g = std::sqrt(g2);
  const double M = mi + mj;
  for (int k = 0; k < d; ++k) {
    const double com = mi * v[k] + mj * vs[k];
    vp[k] = (com + mj * g * sigma[k]) / M;
    vsp[k] = (com - mi * g * sigma[k]) / M;
  }
}

bool interpolate(const VelocityGrid& grid, const double* v, Interp& out) {
  const double R = grid.rv(), h = grid.spacing();
  const int mv = grid.mv();
  int base[2] = {0, 0};
  double frac[2] = {0.0, 0.0};
  for (int k = 0; k < grid.dim(); ++k) {
    if (v[k] < -R * (1.0 + 1e-13) || v[k] > R * (1.0 + 1e-13)) return false;
    const double t = (v[k] + R) / h;
    int b = static_cast<int>(std::floor(t));
    if (b < 0) b = 0;
    if (b > mv - 2) b = mv - 2;
    base[k] = b;
    frac[k] = std::min(1.0, std::max(0.0, t - b));
  }
  if (grid.dim() == 1) {
    out.count = 2;
    out.idx = {base[0], base[0] + 1, 0, 0};
    out.w = {1.0 - frac[0], frac[0], 0.0, 0.0};
  } else {
    out.count = 4;
    const int q00 = base[0] + mv * base[1];
    out.idx = {q00, q00 + 1, q00 + mv, q00 + mv + 1};
    out.w = {(1.0 - frac[0]) * (1.0 - frac[1]), frac[0] * (1.0 - frac[1]), (1.0 - frac[0]) * frac[1],
             frac[0] * frac[1]};
  }
  return true;
}

CollisionStencil::CollisionStencil(const Mixture& mix, const VelocityGrid& grid)
    : mix_(&mix), grid_(&grid) {
  if (mix.dim() != grid.dim()) throw config_error("mixture and grid dimensions differ");
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count();
  const std::size_t count = static_cast<std::size_t>(N) * N * Q * Q * A;
  kept_.assign((count + 7) / 8, 0);
  per_pair_truncated_.assign(static_cast<std::size_t>(N) * N, 0);
  double vp[2], vsp[2];
  Interp a1, a2;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int q = 0; q < Q; ++q)
        for (int p = 0; p < Q; ++p)
          for (int a = 0; a < A; ++a) {
            precollisional(mix.mass(i), mix.mass(j), grid.node(q), grid.node(p), grid.sigma(a), grid.dim(), vp,
                           vsp);
            const bool in = interpolate(grid, vp, a1) && interpolate(grid, vsp, a2);
            const std::size_t f = flat(i, j, q, p, a);
            if (in)
              kept_[f >> 3] |= static_cast<std::uint8_t>(1u << (f & 7));
            else
              ++per_pair_truncated_[i * N + j];
          }
  total_ = static_cast<std::int64_t>(count);
  truncated_ = 0;
  for (auto t : per_pair_truncated_) truncated_ += t;
}

std::size_t CollisionStencil::flat(int i, int j, int q, int p, int a) const {
  const std::size_t N = mix_->species(), Q = grid_->size(), A = grid_->angular_count();
  return (((static_cast<std::size_t>(i) * N + j) * Q + q) * Q + p) * A + a;
}

bool CollisionStencil::kept(int i, int j, int q, int p, int a) const {
  const std::size_t f = flat(i, j, q, p, a);
  return (kept_[f >> 3] >> (f & 7)) & 1u;
}

bool CollisionStencil::event(int i, int j, int q, int p, int a, CollisionEvent& e) const {
  if (!kept(i, j, q, p, a)) return false;
  const VelocityGrid& g = *grid_;
  const int d = g.dim();
  const double* v = g.node(q);
  const double* vs = g.node(p);
  const double* s = g.sigma(a);
  precollisional(mix_->mass(i), mix_->mass(j), v, vs, s, d, e.vprime, e.vsprime);
  if (!interpolate(g, e.vprime, e.vp) || !interpolate(g, e.vsprime, e.vsp)) return false;
  double g2 = 0.0, dot = 0.0;
  for (int k = 0; k < d; ++k) {
    const double r = v[k] - vs[k];
    g2 += r * r;
    dot += r * s[k];
  }
  const double speed = std::sqrt(g2);
  const double cos_theta = speed > 0.0 ? dot / speed : 1.0;
  e.weight = g.weight(p) * g.angular_weight(a) * mix_->kernel(i, j, speed, cos_theta);
  return true;
}

std::uint64_t CollisionStencil::hash() const {
  Fnv1a h;
  h.add(static_cast<std::int64_t>(mix_->hash())).add(static_cast<std::int64_t>(grid_->hash()));
  return h.value();
}

namespace {
constexpr char kStencilMagic[6] = {'F', 'I', 'C', 'K', 'Q', '1'};

struct StencilHeader {
  char magic[6];
  std::int32_t d;
  std::int32_t mv;
  double rv;
  std::int32_t angular;
  std::uint64_t mixture_hash;
};
}  // namespace

void CollisionStencil::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot write stencil cache " + path);
  os.write(kStencilMagic, 6);
  const std::int32_t d = grid_->dim(), mv = grid_->mv(), ang = grid_->angular_count();
  const double rv = grid_->rv();
  const std::uint64_t mh = mix_->hash();
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&mv), sizeof mv);
  os.write(reinterpret_cast<const char*>(&rv), sizeof rv);
  os.write(reinterpret_cast<const char*>(&ang), sizeof ang);
  os.write(reinterpret_cast<const char*>(&mh), sizeof mh);
  const std::uint64_t n_pairs = per_pair_truncated_.size(), n_mask = kept_.size();
  os.write(reinterpret_cast<const char*>(&n_pairs), sizeof n_pairs);
  os.write(reinterpret_cast<const char*>(per_pair_truncated_.data()),
           static_cast<std::streamsize>(n_pairs * sizeof(std::int64_t)));
  os.write(reinterpret_cast<const char*>(&n_mask), sizeof n_mask);
  os.write(reinterpret_cast<const char*>(kept_.data()), static_cast<std::streamsize>(n_mask));
}

bool CollisionStencil::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[6];
  std::int32_t d = 0, mv = 0, ang = 0;
  double rv = 0.0;
  std::uint64_t mh = 0;
  is.read(magic, 6);
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&mv), sizeof mv);
  is.read(reinterpret_cast<char*>(&rv), sizeof rv);
  is.read(reinterpret_cast<char*>(&ang), sizeof ang);
  is.read(reinterpret_cast<char*>(&mh), sizeof mh);
  if (!is || std::memcmp(magic, kStencilMagic, 6) != 0) return false;
  if (d != grid_->dim() || mv != grid_->mv() || rv != grid_->rv() || ang != grid_->angular_count()) return false;
  if (mh != mix_->hash()) throw config_error("stencil cache " + path + " belongs to a different mixture");
  std::uint64_t n_pairs = 0, n_mask = 0;
  is.read(reinterpret_cast<char*>(&n_pairs), sizeof n_pairs);
  if (!is || n_pairs != per_pair_truncated_.size()) return false;
  std::vector<std::int64_t> trunc(n_pairs);
  is.read(reinterpret_cast<char*>(trunc.data()), static_cast<std::streamsize>(n_pairs * sizeof(std::int64_t)));
  is.read(reinterpret_cast<char*>(&n_mask), sizeof n_mask);
  if (!is || n_mask != kept_.size()) return false;
  std::vector<std::uint8_t> mask(n_mask);
  is.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(n_mask));
  if (!is) return false;
  per_pair_truncated_ = std::move(trunc);
  kept_ = std::move(mask);
  truncated_ = 0;
  for (auto t : per_pair_truncated_) truncated_ += t;
  return true;
}

std::vector<GridFunction> collision_invariants(const Mixture& mix, const VelocityGrid& grid) {
  const int N = mix.species(), Q = grid.size(), d = grid.dim();
  std::vector<GridFunction> out;
  for (int k = 0; k < N; ++k) {
    GridFunction e = GridFunction::Zero(N, Q);
    e.row(k).setOnes();
    out.push_back(e);
  }
  for (int k = 0; k < d; ++k) {
    GridFunction e(N, Q);
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < Q; ++q) e(i, q) = mix.mass(i) * grid.node(q, k);
    out.push_back(e);
  }
  GridFunction e(N, Q);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < Q; ++q) {
      double v2 = 0.0;
      for (int k = 0; k < d; ++k) v2 += grid.node(q, k) * grid.node(q, k);
      e(i, q) = mix.mass(i) * v2;
    }
  out.push_back(e);
  return out;
}

double invariant_defect(const GridFunction& Q, const Mixture& mix, const VelocityGrid& grid) {
  double l1 = 0.0;
  for (int i = 0; i < Q.rows(); ++i)
    for (int q = 0; q < Q.cols(); ++q) l1 += grid.weight(q) * std::abs(Q(i, q));
  if (l1 == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& psi : collision_invariants(mix, grid)) {
    double s = 0.0, scale = 0.0;
    for (int i = 0; i < Q.rows(); ++i)
      for (int q = 0; q < Q.cols(); ++q) {
        s += grid.weight(q) * Q(i, q) * psi(i, q);
        scale = std::max(scale, std::abs(psi(i, q)));
      }
    worst = std::max(worst, std::abs(s) / (l1 * std::max(1.0, scale)));
  }
  return worst;
}

namespace {

// Log of mu on all nodes, per species.
Eigen::MatrixXd log_mu_table(const Mixture& mix, const VelocityGrid& grid) {
  Eigen::MatrixXd t(mix.species(), grid.size());
  for (int i = 0; i < mix.species(); ++i)
    for (int q = 0; q < grid.size(); ++q) t(i, q) = log_mu(mix, i, grid.node(q));
  return t;
}

// H(v') = F(v') / mu(v') with F/mu interpolated, evaluated as
// sum_r lambda_r F(r) exp(log mu(v') - log mu(r)).
double ratio_at(const Interp& in, const double* vexact, const Mixture& mix, int s,
                const Eigen::RowVectorXd& F, const Eigen::MatrixXd& lmu) {
  const double lv = log_mu(mix, s, vexact);
  double acc = 0.0;
  for (int c = 0; c < in.count; ++c)
    if (in.w[c] != 0.0) acc += in.w[c] * F(in.idx[c]) * std::exp(lv - lmu(s, in.idx[c]));
  return acc;
}

// Projects one pair block onto the invariants of that pair.
void correct_pair(std::vector<Eigen::RowVectorXd>& pair, int i, int j, const Mixture& mix,
                  const VelocityGrid& grid, const Eigen::MatrixXd& mu_tab) {
  const int N = mix.species(), Q = grid.size(), d = grid.dim();
  const bool same = i == j;
  std::vector<int> sp = same ? std::vector<int>{i} : std::vector<int>{i, j};
  // psi[k][s] = invariant k restricted to species sp[s]
  const int nmass = static_cast<int>(sp.size());
  const int K = nmass + d + 1;
  std::vector<std::vector<Eigen::RowVectorXd>> psi(K, std::vector<Eigen::RowVectorXd>(sp.size()));
  for (int k = 0; k < K; ++k)
    for (std::size_t s = 0; s < sp.size(); ++s) {
      Eigen::RowVectorXd row(Q);
      const double m = mix.mass(sp[s]);
      for (int q = 0; q < Q; ++q) {
        if (k < nmass)
          row(q) = (static_cast<int>(s) == k) ? 1.0 : 0.0;
        else if (k < nmass + d)
          row(q) = m * grid.node(q, k - nmass);
        else {
          double v2 = 0.0;
          for (int c = 0; c < d; ++c) v2 += grid.node(q, c) * grid.node(q, c);
          row(q) = m * v2;
        }
      }
      psi[k][s] = row;
    }
  std::vector<Eigen::RowVectorXd*> blocks;
  blocks.push_back(&pair[i * N + j]);
  if (!same) blocks.push_back(&pair[j * N + i]);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(K);
  for (int k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < sp.size(); ++s) {
      const auto wmu = grid.weights().transpose().cwiseProduct(mu_tab.row(sp[s]));
      r(k) += (blocks[s]->cwiseProduct(grid.weights().transpose())).dot(psi[k][s]);
      for (int l = 0; l < K; ++l) G(k, l) += (wmu.cwiseProduct(psi[k][s])).dot(psi[l][s]);
    }
  }
  const Eigen::VectorXd c = G.ldlt().solve(-r);
  for (std::size_t s = 0; s < sp.size(); ++s) {
    Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(Q);
    for (int k = 0; k < K; ++k) delta += c(k) * psi[k][s];
    *blocks[s] += delta.cwiseProduct(mu_tab.row(sp[s]));
  }
}

}  // namespace

CollisionResult apply_Q(const GridFunction& F, const CollisionStencil& stencil, bool correct) {
  const Mixture& mix = stencil.mixture();
  const VelocityGrid& grid = stencil.grid();
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count();
  if (F.rows() != N || F.cols() != Q) throw dimension_error("apply_Q: F must be N x Q_v");
  if ((F.array() < 0.0).any()) throw domain_error("apply_Q: F has negative entries");
  if (!F.allFinite()) throw domain_error("apply_Q: F is not finite");
  const Eigen::MatrixXd lmu = log_mu_table(mix, grid);
  CollisionResult res;
  res.pair.assign(static_cast<std::size_t>(N) * N, Eigen::RowVectorXd::Zero(Q));
  CollisionEvent e;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      Eigen::RowVectorXd& out = res.pair[i * N + j];
      const Eigen::RowVectorXd Fi = F.row(i), Fj = F.row(j);
      for (int q = 0; q < Q; ++q) {
        double acc = 0.0;
        for (int p = 0; p < Q; ++p)
          for (int a = 0; a < A; ++a) {
            if (!stencil.event(i, j, q, p, a, e)) continue;
            const double gain = ratio_at(e.vp, e.vprime, mix, i, Fi, lmu) *
                                ratio_at(e.vsp, e.vsprime, mix, j, Fj, lmu);
            acc += e.weight * (gain - Fi(q) * Fj(p));
          }
        out(q) = acc;
      }
    }
  GridFunction raw = GridFunction::Zero(N, Q);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) raw.row(i) += res.pair[i * N + j];
  res.raw_invariant_defect = invariant_defect(raw, mix, grid);
  if (correct) {
    const Eigen::MatrixXd mu_tab = lmu.array().exp().matrix();
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) correct_pair(res.pair, i, j, mix, grid, mu_tab);
  }
  res.Q = GridFunction::Zero(N, Q);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) res.Q.row(i) += res.pair[i * N + j];
  return res;
}

double entropy_sign(const GridFunction& F, const CollisionStencil& stencil) {
  const Mixture& mix = stencil.mixture();
  const VelocityGrid& grid = stencil.grid();
  const int N = mix.species(), Q = grid.size(), A = grid.angular_count();
  if (F.rows() != N || F.cols() != Q) throw dimension_error("entropy_sign: F must be N x Q_v");
  if (!(F.array() > 0.0).all()) throw domain_error("entropy_sign: F must be strictly positive");
  const Eigen::MatrixXd lmu = log_mu_table(mix, grid);
  CollisionEvent e;
  double acc = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const Eigen::RowVectorXd Fi = F.row(i), Fj = F.row(j);
      for (int q = 0; q < Q; ++q)
        for (int p = 0; p < Q; ++p)
          for (int a = 0; a < A; ++a) {
            if (!stencil.event(i, j, q, p, a, e)) continue;
            const double gp = ratio_at(e.vp, e.vprime, mix, i, Fi, lmu) *
                              ratio_at(e.vsp, e.vsprime, mix, j, Fj, lmu);
            const double g0 = Fi(q) * Fj(p);
            if (gp <= 0.0) continue;
            // (F'F'_* - F F_*) log(F'F'_* / (F F_*)) >= 0 termwise
            acc += grid.weight(q) * e.weight * (gp - g0) * std::log(gp / g0);
          }
    }
  return -0.25 * acc;
}

}  // namespace fickkin

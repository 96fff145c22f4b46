#include "fickkin/velocity_grid.hpp"

#include <cmath>
#include <numbers>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

VelocityGrid::VelocityGrid(int d, double rv, int mv, int angular_count)
    : d_(d), rv_(rv), mv_(mv), h_(2.0 * rv / (mv - 1)) {
  int q_count = 1;
  for (int k = 0; k < d; ++k) q_count *= mv;
  nodes_.resize(static_cast<std::size_t>(q_count) * d);
  weights_.resize(q_count);
  for (int q = 0; q < q_count; ++q) {
    int rest = q;
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const int idx = rest % mv;
      rest /= mv;
      nodes_[static_cast<std::size_t>(q) * d + k] = coord(idx);
      w *= (idx == 0 || idx == mv - 1) ? 0.5 * h_ : h_;
    }
    weights_(q) = w;
  }
  // Symmetrize coordinates exactly: the lattice formula is not bitwise odd.
  for (int q = 0; q < q_count; ++q) {
    const int mq = mirror(q);
    if (mq > q)
      for (int k = 0; k < d; ++k) nodes_[static_cast<std::size_t>(mq) * d + k] = -node(q, k);
  }
  if (d == 1) {
    sigmas_ = {1.0, -1.0};
    angular_weights_ = {1.0, 1.0};
  } else {
    const double da = 2.0 * std::numbers::pi / angular_count;
    for (int a = 0; a < angular_count; ++a) {
      const double t = a * da;
      sigmas_.push_back(std::cos(t));
      sigmas_.push_back(std::sin(t));
      angular_weights_.push_back(da);
    }
    // Exact values on the axes keep reflection symmetry bitwise.
    for (auto& s : sigmas_)
      if (std::abs(s) < 1e-15) s = 0.0;
  }
}

int VelocityGrid::mirror(int q) const {
  int rest = q, out = 0, stride = 1;
  for (int k = 0; k < d_; ++k) {
    const int idx = rest % mv_;
    rest /= mv_;
    out += (mv_ - 1 - idx) * stride;
    stride *= mv_;
  }
  return out;
}

std::uint64_t VelocityGrid::hash() const {
  Fnv1a h;
  h.add(std::string_view("grid"));
  h.add(static_cast<std::int64_t>(d_)).add(rv_).add(static_cast<std::int64_t>(mv_));
  h.add(static_cast<std::int64_t>(angular_count()));
  return h.value();
}

VelocityGrid build_grid(int d, double rv, int mv, int angular_count) {
  if (d != 1 && d != 2) throw config_error("velocity dimension must be 1 or 2");
  if (!(rv > 0.0)) throw config_error("grid.rv must be positive");
  if (mv < 8) throw config_error("grid.mv must be at least 8");
  if (mv % 2 != 0) throw config_error("grid.mv must be even (v -> -v symmetry)");
  if (d == 2 && angular_count < 8) throw config_error("grid.angular must be at least 8");
  return VelocityGrid(d, rv, mv, angular_count);
}

double default_rv(const Mixture& mix) { return 6.0 / std::sqrt(mix.masses().minCoeff()); }

GridFunction mu_vector(const Mixture& mix, const VelocityGrid& grid) {
  GridFunction out(mix.species(), grid.size());
  for (int i = 0; i < mix.species(); ++i)
    for (int q = 0; q < grid.size(); ++q) out(i, q) = mu(mix, i, grid.node(q));
  return out;
}

GridFunction maxwellian_vector(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid) {
  require_positive(mix, n);
  GridFunction out = mu_vector(mix, grid);
  for (int i = 0; i < mix.species(); ++i) out.row(i) *= n(i);
  return out;
}

double weighted_inner(const GridFunction& f, const GridFunction& g, const GridFunction& M,
                      const VelocityGrid& grid) {
  if (f.rows() != g.rows() || f.cols() != g.cols() || f.rows() != M.rows() || f.cols() != M.cols() ||
      f.cols() != grid.size())
    throw dimension_error("weighted_inner: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < f.rows(); ++i)
    for (int q = 0; q < f.cols(); ++q)
      if (M(i, q) > 0.0) acc += grid.weight(q) * f(i, q) * g(i, q) / M(i, q);
  return acc;
}

double weighted_norm(const GridFunction& f, const GridFunction& M, const VelocityGrid& grid) {
  return std::sqrt(weighted_inner(f, f, M, grid));
}

double integrate(const Eigen::Ref<const Eigen::RowVectorXd>& row, const VelocityGrid& grid) {
  if (row.size() != grid.size()) throw dimension_error("integrate: shape mismatch");
  return row.dot(grid.weights().transpose());
}

}  // namespace fickkin

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <tuple>

#include "fickkin/collision.hpp"
#include "fickkin/fick_matrix.hpp"
#include "fickkin/linear_operator.hpp"
#include "fickkin/mixture.hpp"
#include "fickkin/velocity_grid.hpp"

namespace fickkin::testing {

/// Mixture, grid, blocks and operator kept alive together.
struct OperatorSetup {
  OperatorSetup(const Eigen::VectorXd& m, const Eigen::VectorXd& n, int mv, int angular, double gamma = 0.0,
        AngularProfile profile = AngularProfile::Constant)
      : mix(m, Eigen::MatrixXd::Ones(m.size(), m.size()), gamma, profile, 2),
        grid(build_grid(2, 6.0 / std::sqrt(m.minCoeff()), mv, angular)),
        stencil(mix, grid),
        blocks(assemble_blocks(stencil)),
        op(blocks, mix, grid, n) {}

  Mixture mix;
  VelocityGrid grid;
  CollisionStencil stencil;
  OperatorBlocks blocks;
  LinearizedOperator op;
};

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double d : v) x(k++) = d;
  return x;
}

/// Shared small setups, built once per test binary.
inline OperatorSetup& small_setup(int which) {
  static std::map<int, std::unique_ptr<OperatorSetup>> cache;
  auto& s = cache[which];
  if (!s) {
    switch (which) {
      case 0:  // unequal masses
        s = std::make_unique<OperatorSetup>(vec({1, 3}), vec({1, 2}), 16, 16);
        break;
      case 1:  // equal masses
        s = std::make_unique<OperatorSetup>(vec({1, 1}), vec({1, 1}), 16, 16);
        break;
      default:  // three species
        s = std::make_unique<OperatorSetup>(vec({1, 2, 3}), vec({1, 2, 1.5}), 16, 16);
        break;
    }
  }
  return *s;
}

/// Random positive perturbation F = M (1 + amp u), u uniform in [-1, 1].
inline GridFunction random_positive(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                    std::mt19937_64& rng, double amp = 0.3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction F = maxwellian_vector(mix, n, grid);
  for (Eigen::Index k = 0; k < F.size(); ++k) F(k) *= 1.0 + amp * u(rng);
  return F;
}

/// Random grid function of size M scale, mixed signs.
inline GridFunction random_perturbation(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid,
                                        std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  GridFunction F = maxwellian_vector(mix, n, grid);
  for (Eigen::Index k = 0; k < F.size(); ++k) F(k) *= g(rng);
  return F;
}

/// Random vector with sum m_i g_i = 0.
inline Eigen::VectorXd random_admissible(const Eigen::VectorXd& m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(m.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
  return v - (m.dot(v) / m.squaredNorm()) * m;
}

/// sum_i sum_q w_q Q_i psi_i for psi = e_k, m v_k, m |v|^2, computed here
/// from the formulas rather than the library's invariant list.
inline Eigen::VectorXd weak_invariants(const GridFunction& Q, const Mixture& mix, const VelocityGrid& grid) {
  const int N = mix.species(), d = grid.dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N + d + 1);
  for (int i = 0; i < N; ++i)
    for (int q = 0; q < grid.size(); ++q) {
      const double w = grid.weight(q) * Q(i, q);
      double v2 = 0.0;
      out(i) += w;
      for (int k = 0; k < d; ++k) {
        out(N + k) += w * mix.mass(i) * grid.node(q, k);
        v2 += grid.node(q, k) * grid.node(q, k);
      }
      out(N + d) += w * mix.mass(i) * v2;
    }
  return out;
}

/// L1 size sum_i sum_q w_q |Q_i| (1 + |v|^2), the scale for the invariants.
inline double weak_scale(const GridFunction& Q, const Mixture& mix, const VelocityGrid& grid) {
  double s = 0.0;
  for (int i = 0; i < mix.species(); ++i)
    for (int q = 0; q < grid.size(); ++q) {
      double v2 = 0.0;
      for (int k = 0; k < grid.dim(); ++k) v2 += grid.node(q, k) * grid.node(q, k);
      s += grid.weight(q) * std::abs(Q(i, q)) * mix.mass(i) * (1.0 + v2);
    }
  return s;
}

/// Closed-form kernel basis of L in f coordinates: e_i M_i, v_k m_i M_i, |v|^2 m_i M_i.
inline std::vector<GridFunction> analytic_kernel(const Mixture& mix, const Eigen::VectorXd& n, const VelocityGrid& grid) {
  const int N = mix.species(), d = grid.dim();
  const GridFunction M = maxwellian_vector(mix, n, grid);
  std::vector<GridFunction> out;
  for (int i = 0; i < N; ++i) {
    GridFunction f = GridFunction::Zero(N, grid.size());
    f.row(i) = M.row(i);
    out.push_back(f);
  }
  for (int k = 0; k <= d; ++k) {
    GridFunction f(N, grid.size());
    for (int i = 0; i < N; ++i)
      for (int q = 0; q < grid.size(); ++q) {
        double v = 0.0;
        if (k < d) {
          v = grid.node(q, k);
        } else {
          for (int c = 0; c < d; ++c) v += grid.node(q, c) * grid.node(q, c);
        }
        f(i, q) = mix.mass(i) * v * M(i, q);
      }
    out.push_back(f);
  }
  return out;
}

/// sin of the largest principal angle between span(V) and span(W) (columns, any scaling).
inline double principal_angle(const Eigen::MatrixXd& V, const Eigen::MatrixXd& W) {
  const Eigen::MatrixXd Qv = Eigen::HouseholderQR<Eigen::MatrixXd>(V).householderQ() *
                             Eigen::MatrixXd::Identity(V.rows(), V.cols());
  const Eigen::MatrixXd Qw = Eigen::HouseholderQR<Eigen::MatrixXd>(W).householderQ() *
                             Eigen::MatrixXd::Identity(W.rows(), W.cols());
  const Eigen::MatrixXd R = Qv - Qw * (Qw.transpose() * Qv);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues()(0);
}

}  // namespace fickkin::testing

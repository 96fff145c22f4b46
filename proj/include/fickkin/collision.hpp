#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fickkin/mixture.hpp"
#include "fickkin/velocity_grid.hpp"

namespace fickkin {

/// Pre-collisional velocities for the pair (m_i, m_j):
///   v'   = (m_i v + m_j v_* + m_j |v - v_*| sigma) / (m_i + m_j)
///   v'_* = (m_i v + m_j v_* - m_i |v - v_*| sigma) / (m_i + m_j)
void precollisional(double mi, double mj, const double* v, const double* vs, const double* sigma, int d,
                    double* vp, double* vsp);

/// Multilinear interpolation of an off-lattice point onto at most 2^d nodes.
struct Interp {
  std::array<int, 4> idx{};
  std::array<double, 4> w{};
  int count = 0;
};

/// Returns false when v lies outside [-R_v, R_v]^d.
bool interpolate(const VelocityGrid& grid, const double* v, Interp& out);

/// One discrete collision event (pair (i,j), nodes q and p, angular node a).
struct CollisionEvent {
  Interp vp;         // v' for species i
  Interp vsp;        // v'_* for species j
  double weight;     // w_p * omega_a * B_ij
  double vprime[2];  // exact pre-collisional velocities
  double vsprime[2];
};

/// Collision geometry for a mixture on a grid. Events are generated on demand
/// (the geometry is cheap); the stencil records which events stay in the box.
class CollisionStencil {
 public:
  CollisionStencil(const Mixture& mix, const VelocityGrid& grid);

  const Mixture& mixture() const { return *mix_; }
  const VelocityGrid& grid() const { return *grid_; }

  /// Fills e for the event; returns false if it is truncated (v' or v'_* out of box).
  bool event(int i, int j, int q, int p, int a, CollisionEvent& e) const;

  std::int64_t total_events() const { return total_; }
  std::int64_t truncated_events() const { return truncated_; }
  std::int64_t truncated(int i, int j) const { return per_pair_truncated_[i * mix_->species() + j]; }
  bool kept(int i, int j, int q, int p, int a) const;

  /// Content hash: mixture hash combined with grid parameters.
  std::uint64_t hash() const;

  /// Binary cache "FICKQ1". load() returns false (and leaves the stencil
  /// unchanged) on a corrupted header; throws on a mixture hash mismatch.
  void save(const std::string& path) const;
  bool load(const std::string& path);

 private:
  std::size_t flat(int i, int j, int q, int p, int a) const;

  const Mixture* mix_;
  const VelocityGrid* grid_;
  std::vector<std::uint8_t> kept_;  // bitmask over (i, j, q, p, a)
  std::vector<std::int64_t> per_pair_truncated_;
  std::int64_t total_ = 0;
  std::int64_t truncated_ = 0;
};

struct CollisionResult {
  GridFunction Q;                      // N x Q_v, corrected
  std::vector<Eigen::RowVectorXd> pair;  // Q_ij(F_i, F_j), index i * N + j, corrected
  double raw_invariant_defect = 0.0;   // relative, before the correction
};

/// Evaluates Q(F). With correct = true, each pair block is projected onto the
/// discrete collision invariants (least squares in the sum w |delta|^2 / mu metric).
CollisionResult apply_Q(const GridFunction& F, const CollisionStencil& stencil, bool correct = true);

/// Collision invariants psi in Span{e_1..e_N, v_k m, |v|^2 m}, as N x Q_v grid functions.
std::vector<GridFunction> collision_invariants(const Mixture& mix, const VelocityGrid& grid);

/// Largest |sum_i sum_q w_q Q_i psi_i| over the invariants, relative to sum |Q| w (L1 size).
double invariant_defect(const GridFunction& Q, const Mixture& mix, const VelocityGrid& grid);

/// Symmetrized discrete entropy dissipation with psi = log F; always <= 0.
double entropy_sign(const GridFunction& F, const CollisionStencil& stencil);

}  // namespace fickkin

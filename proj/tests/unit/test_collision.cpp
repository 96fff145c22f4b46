#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "fickkin/collision.hpp"
#include "fickkin/errors.hpp"
#include "support.hpp"

using namespace fickkin;
using namespace fickkin::testing;

TEST(Collision, PrecollisionalConservesMomentumAndEnergy) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2), ang(0, 6.283185307179586);
  for (int trial = 0; trial < 200; ++trial) {
    const double mi = 1.0 + 2.0 * std::abs(u(rng)), mj = 1.0 + std::abs(u(rng));
    const double v[2] = {u(rng), u(rng)}, vs[2] = {u(rng), u(rng)};
    const double a = ang(rng), s[2] = {std::cos(a), std::sin(a)};
    double vp[2], vsp[2];
    precollisional(mi, mj, v, vs, s, 2, vp, vsp);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(mi * v[k] + mj * vs[k], mi * vp[k] + mj * vsp[k], 1e-12);
    const double e0 = mi * (v[0] * v[0] + v[1] * v[1]) + mj * (vs[0] * vs[0] + vs[1] * vs[1]);
    const double e1 = mi * (vp[0] * vp[0] + vp[1] * vp[1]) + mj * (vsp[0] * vsp[0] + vsp[1] * vsp[1]);
    EXPECT_NEAR(e0, e1, 1e-11 * (1.0 + e0));
  }
}

TEST(Collision, CorrectedOperatorConservesInvariantsOnRandomData) {
  OperatorSetup& s = small_setup(0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    const GridFunction F = random_positive(s.mix, vec({1, 2}), s.grid, rng);
    const CollisionResult r = apply_Q(F, s.stencil, true);
    const Eigen::VectorXd inv = weak_invariants(r.Q, s.mix, s.grid);
    EXPECT_LE(inv.cwiseAbs().maxCoeff(), 1e-10 * weak_scale(r.Q, s.mix, s.grid)) << "seed " << seed;
    EXPECT_LE(invariant_defect(r.Q, s.mix, s.grid), 1e-10);
    // Pair blocks sum to the species rows.
    GridFunction sum = GridFunction::Zero(2, s.grid.size());
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) sum.row(i) += r.pair[i * 2 + j];
    EXPECT_LE((sum - r.Q).cwiseAbs().maxCoeff(), 1e-13 * r.Q.cwiseAbs().maxCoeff());
  }
}

TEST(Collision, MaxwellianIsAnEquilibrium) {
  OperatorSetup& s = small_setup(0);
  const GridFunction M = maxwellian_vector(s.mix, vec({1, 2}), s.grid);
  const CollisionResult r = apply_Q(M, s.stencil, true);
  EXPECT_LE(r.Q.cwiseAbs().maxCoeff(), 1e-6 * M.cwiseAbs().maxCoeff());
}

TEST(Collision, EntropyDissipationIsNonPositive) {
  OperatorSetup& s = small_setup(2);
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    std::mt19937_64 rng(seed);
    const GridFunction F = random_positive(s.mix, vec({1, 2, 1.5}), s.grid, rng, 0.5);
    EXPECT_LE(entropy_sign(F, s.stencil), 1e-14) << "seed " << seed;
  }
}

TEST(Collision, InvariantListSpansExpectedDimension) {
  OperatorSetup& s = small_setup(0);
  EXPECT_EQ(collision_invariants(s.mix, s.grid).size(), 5u);
}

TEST(Collision, TruncationIsReportedNotFatal) {
  OperatorSetup& s = small_setup(0);
  EXPECT_GT(s.stencil.total_events(), 0);
  EXPECT_GT(s.stencil.truncated_events(), 0);
  EXPECT_LT(s.stencil.truncated_events(), s.stencil.total_events());
}

TEST(Collision, StencilCacheRoundTripAndCorruption) {
  OperatorSetup& s = small_setup(0);
  const std::string dir = ::testing::TempDir() + "/fickkin_stencil";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/s.fq1";
  s.stencil.save(path);
  CollisionStencil copy(s.mix, s.grid);
  ASSERT_TRUE(copy.load(path));
  EXPECT_EQ(copy.truncated_events(), s.stencil.truncated_events());
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  EXPECT_FALSE(copy.load(path));
  // A stencil file from a different mixture is refused.
  s.stencil.save(path);
  Mixture other(vec({1, 2}), Eigen::MatrixXd::Ones(2, 2), 0.0, AngularProfile::Constant, 2);
  VelocityGrid g = s.grid;
  CollisionStencil foreign(other, g);
  EXPECT_THROW(foreign.load(path), Error);
}

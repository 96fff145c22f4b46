#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fickkin/errors.hpp"
#include "fickkin/mixture.hpp"
#include "fickkin/velocity_grid.hpp"
#include "support.hpp"

using namespace fickkin;
using fickkin::testing::vec;

namespace {

Mixture two(double m1, double m2, AngularProfile p = AngularProfile::Constant) {
  return Mixture(vec({m1, m2}), Eigen::MatrixXd::Ones(2, 2), 0.0, p, 2);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no fickkin::Error thrown";
  return ErrorKind::Numerical;
}

}  // namespace

TEST(Mixture, AsymmetricKernelNamesThePair) {
  Eigen::MatrixXd C(2, 2);
  C << 1.0, 2.0, 1.5, 1.0;
  Mixture mix(vec({1, 2}), C, 0.0, AngularProfile::Constant, 2);
  const HypothesisReport r = validate_hypotheses(mix, 256);
  EXPECT_FALSE(r.symmetric);
  ASSERT_EQ(r.asymmetric_pairs.size(), 1u);
  EXPECT_EQ(r.asymmetric_pairs[0], std::make_pair(1, 2));
  EXPECT_NE(r.summary().find("(1,2)"), std::string::npos);
  EXPECT_EQ(kind_of([&] { require_valid(mix); }), ErrorKind::Config);
}

TEST(Mixture, ConstructorRejectsBadInput) {
  EXPECT_EQ(kind_of([] { Mixture(vec({1}), Eigen::MatrixXd::Ones(1, 1), 0, AngularProfile::Constant, 2); }),
            ErrorKind::Config);
  EXPECT_EQ(kind_of([] { Mixture(vec({1, -1}), Eigen::MatrixXd::Ones(2, 2), 0, AngularProfile::Constant, 2); }),
            ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { Mixture(vec({1, 1}), Eigen::MatrixXd::Ones(2, 2), 1.5, AngularProfile::Constant, 2); }),
            ErrorKind::Config);
  EXPECT_EQ(kind_of([] { Mixture(vec({1, 1}), Eigen::MatrixXd::Ones(3, 3), 0, AngularProfile::Constant, 2); }),
            ErrorKind::Dimension);
}

TEST(Mixture, MaxwellianRequiresPositiveConcentration) {
  const Mixture mix = two(1, 2);
  const double v[2] = {0.3, -0.2};
  EXPECT_EQ(kind_of([&] { maxwellian(mix, 0, 0.0, v); }), ErrorKind::Domain);
  EXPECT_NEAR(maxwellian(mix, 1, 2.0, v), 2.0 * mu(mix, 1, v), 1e-15);
  EXPECT_NEAR(std::log(mu(mix, 1, v)), log_mu(mix, 1, v), 1e-13);
  EXPECT_EQ(kind_of([&] { require_positive(mix, vec({1, -1})); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([&] { require_positive(mix, vec({1, 1, 1})); }), ErrorKind::Dimension);
}

TEST(Mixture, ScalarsAreSums) {
  const Mixture mix = two(1, 3);
  const MixtureScalars s = mixture_scalars(mix, vec({1, 2}));
  EXPECT_DOUBLE_EQ(s.c_inf, 3.0);
  EXPECT_DOUBLE_EQ(s.rho_inf, 7.0);
}

TEST(Mixture, ConstantProfileOverlapIsTheCircle) {
  // min{b, b} = b0 everywhere, so c^b = 2 pi b0.
  EXPECT_NEAR(angular_cb(two(1, 1)), 2.0 * std::numbers::pi, 1e-12);
}

TEST(Mixture, GradProfileHasPositiveOverlap) {
  const Mixture mix = two(1, 2, AngularProfile::Grad);
  const HypothesisReport r = validate_hypotheses(mix, 1024);
  EXPECT_TRUE(r.grad_bound_ok);
  EXPECT_TRUE(r.c_b_positive);
  EXPECT_GT(r.c_b, 0.0);
  // Overlap of a profile with itself is its full integral, the minimum is no larger.
  EXPECT_LE(r.c_b, angular_overlap(mix, 0.0, 0.0, 1024) + 1e-12);
}

TEST(Mixture, HashDependsOnContent) {
  EXPECT_EQ(two(1, 2).hash(), two(1, 2).hash());
  EXPECT_NE(two(1, 2).hash(), two(1, 3).hash());
}

TEST(VelocityGrid, RejectsOddOrSmallResolution) {
  EXPECT_EQ(kind_of([] { build_grid(2, 6.0, 23, 16); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { build_grid(2, 6.0, 6, 16); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { build_grid(2, -1.0, 24, 16); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { build_grid(2, 6.0, 24, 4); }), ErrorKind::Config);
}

TEST(VelocityGrid, WeightsAndMirror) {
  const VelocityGrid g = build_grid(2, 5.0, 16, 16);
  EXPECT_NEAR(g.weights().sum(), 100.0, 1e-10);
  double ang = 0.0;
  for (int a = 0; a < g.angular_count(); ++a) ang += g.angular_weight(a);
  EXPECT_NEAR(ang, 2.0 * std::numbers::pi, 1e-12);
  for (int q = 0; q < g.size(); ++q) {
    const int p = g.mirror(q);
    EXPECT_DOUBLE_EQ(g.node(p, 0), -g.node(q, 0));
    EXPECT_DOUBLE_EQ(g.node(p, 1), -g.node(q, 1));
    EXPECT_DOUBLE_EQ(g.weight(p), g.weight(q));
  }
}

TEST(VelocityGrid, GaussianMomentsByQuadrature) {
  const Mixture mix = two(1, 3);
  const VelocityGrid g = build_grid(2, default_rv(mix), 24, 16);
  const GridFunction muv = mu_vector(mix, g);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(integrate(muv.row(i), g), 1.0, 1e-8);
    Eigen::RowVectorXd v2(g.size());
    for (int q = 0; q < g.size(); ++q) v2(q) = g.node(q, 0) * g.node(q, 0) * muv(i, q);
    // Truncation at R_v costs about exp(-m R_v^2 / 2) R_v^2.
    EXPECT_NEAR(integrate(v2, g), 1.0 / mix.mass(i), 1e-6);
  }
  const GridFunction M = maxwellian_vector(mix, vec({1, 2}), g);
  EXPECT_NEAR(weighted_inner(M, M, M, g), 3.0, 1e-8);
}

TEST(VelocityGrid, DefaultTruncationScalesWithLightestSpecies) {
  EXPECT_DOUBLE_EQ(default_rv(two(4, 9)), 3.0);
}

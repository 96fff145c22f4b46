#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fickkin/errors.hpp"
#include "fickkin/kinetic.hpp"
#include "support.hpp"

using namespace fickkin;
using namespace fickkin::testing;

namespace {

struct KineticFixture {
  OperatorSetup& s = small_setup(1);
  FickAssembly fa = assemble_fick(s.op);
  FickReference ref = make_ref(0.1);

  FickReference make_ref(double amp) const {
    FickReference r(s.op.n(), fa.a);
    if (amp != 0.0) r.add_mode(1, vec({amp, -amp}), vec({0.0, 0.0}));
    return r;
  }

  // Cell-summed distribution.
  GridFunction cell_sum(const Eigen::MatrixXd& u) const {
    Eigen::VectorXd acc = u.rowwise().sum();
    return s.op.from_u(acc);
  }
};

KineticFixture& fixture() {
  static KineticFixture f;
  return f;
}

}  // namespace

TEST(Kinetic, ReferenceSolvesFrozenFick) {
  KineticFixture& k = fixture();
  const TorusGrid g(1, 32);
  // d_t n = -d_x(A d_x n): compare with a spectral second derivative of the sample.
  const Eigen::MatrixXd n = k.ref.value(0.01, g);
  Eigen::MatrixXd rhs(2, 32);
  for (int i = 0; i < 2; ++i) rhs.row(i) = spectral_derivative(n.row(i), g, 0, 2);
  const Eigen::MatrixXd expect = -k.fa.a * rhs;
  EXPECT_LE((k.ref.dt(0.01, g) - expect).cwiseAbs().maxCoeff(), 1e-10 * expect.cwiseAbs().maxCoeff());
  EXPECT_FALSE(k.ref.trivial());
  EXPECT_TRUE(k.make_ref(0.0).trivial());
}

TEST(Kinetic, ConstantReferenceHasNoSource) {
  KineticFixture& k = fixture();
  const FickReference flat = k.make_ref(0.0);
  const Eigen::MatrixXd S = build_source(flat, 0.1, 0.0, k.s.op, TorusGrid(1, 8));
  EXPECT_EQ(S.cwiseAbs().maxCoeff(), 0.0);
  const SourceReport r = source_structure(flat, 0.1, k.s.op, TorusGrid(1, 8), {0.0, 0.01});
  EXPECT_TRUE(r.trivial);
}

TEST(Kinetic, SourceIsLinearInTheReference) {
  KineticFixture& k = fixture();
  const TorusGrid g(1, 16);
  const Eigen::MatrixXd a = build_source(k.make_ref(0.1), 0.1, 0.02, k.s.op, g);
  const Eigen::MatrixXd b = build_source(k.make_ref(0.3), 0.1, 0.02, k.s.op, g);
  EXPECT_LE((b - 3.0 * a).cwiseAbs().maxCoeff(), 1e-12 * b.cwiseAbs().maxCoeff());
}

TEST(Kinetic, KernelDatumIsStationaryWithoutSource) {
  KineticFixture& k = fixture();
  KineticSimulator sim(k.s.op, k.fa, k.ref, 0.1, 8, false);
  const GridFunction M = maxwellian_vector(k.s.mix, k.s.op.n(), k.s.grid);
  sim.set_uniform(M);
  const Eigen::MatrixXd u0 = sim.state();
  for (int t = 0; t < 20; ++t) sim.step(1e-3);
  EXPECT_LE((sim.state() - u0).cwiseAbs().maxCoeff(), 1e-10 * u0.cwiseAbs().maxCoeff());
  EXPECT_LE(sim.scaled_flux().cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Kinetic, TotalKernelComponentsAreConserved) {
  KineticFixture& k = fixture();
  KineticSimulator sim(k.s.op, k.fa, k.ref, 0.1, 8, false);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd u(k.s.op.size(), 8);
  for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = g(rng);
  sim.set_state(u);
  const GridFunction p0 = k.s.op.project(k.cell_sum(u));
  for (int t = 0; t < 10; ++t) sim.step(1e-3);
  const GridFunction p1 = k.s.op.project(k.cell_sum(sim.state()));
  EXPECT_LE(k.s.op.norm(p1 - p0), 1e-10 * k.s.op.norm(p0));
}

TEST(Kinetic, PureRelaxationObeysSpectralGap) {
  KineticFixture& k = fixture();
  const double eps = 0.1, lam = k.s.op.spectrum().lambda_num;
  const FickReference flat = k.make_ref(0.0);
  KineticSimulator sim(k.s.op, k.fa, flat, eps, 4, false);
  GridFunction f = GridFunction::Zero(2, k.s.grid.size());
  for (int q = 0; q < k.s.grid.size(); ++q) {
    const double v = k.s.grid.node(q, 0), w = k.s.grid.node(q, 1);
    f(0, q) = v * v * v * std::exp(-0.5 * (v * v + w * w));
  }
  f -= k.s.op.project(f);
  sim.set_uniform(f);
  const Trajectory tr = sim.run(2.0 * eps * eps / lam, 0.01 * eps * eps / lam);
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    EXPECT_LE(tr.l2[i], 1.05 * tr.l2.front() * std::exp(-lam * tr.t[i] / (eps * eps))) << "sample " << i;
}

TEST(Kinetic, WellPreparedRunStaysBounded) {
  KineticFixture& k = fixture();
  KineticSimulator sim(k.s.op, k.fa, k.ref, 0.1, 16);
  sim.set_well_prepared();
  const Trajectory tr = sim.run(0.02, 1e-3);
  EXPECT_LE(tr.max_surrogate_ratio, 2.0);
  EXPECT_LT(tr.sup_flux_error, 0.5 * k.fa.a.norm() * 0.1 * 2.0 * 3.1416);
}

TEST(Kinetic, StudyValidatesItsInput) {
  KineticFixture& k = fixture();
  try {
    eps_convergence_study(k.s.op, k.fa, k.ref, {0.2, 0.1}, 0.01, 8);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  EXPECT_THROW(eps_convergence_study(k.s.op, k.fa, k.ref, {0.1, 0.2, 0.05}, 0.01, 8), Error);
  const FickReference flat = k.make_ref(0.0);
  const EpsStudy d = eps_convergence_study(k.s.op, k.fa, flat, {0.2, 0.1, 0.05}, 0.005, 8);
  EXPECT_TRUE(d.degenerate);
}

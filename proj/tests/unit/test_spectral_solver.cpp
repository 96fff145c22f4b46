#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fickkin/errors.hpp"
#include "fickkin/fick_solver.hpp"
#include "fickkin/spectral.hpp"
#include "support.hpp"

using namespace fickkin;
using fickkin::testing::vec;

namespace {

constexpr double kPi = std::numbers::pi;

// Rank-one abar with kernel n o m, negative on the complement.
AbarProvider model_abar(const Eigen::VectorXd& m, double c = 0.1) {
  return [m, c](const Eigen::VectorXd& n) {
    Eigen::VectorXd p(2);
    p << n(1) * m(1), -n(0) * m(0);
    return Eigen::MatrixXd(-c * p * p.transpose() / p.squaredNorm() / (n(0) + n(1)));
  };
}

ConcentrationField mode_field(int cells, const Eigen::VectorXd& m, const Eigen::VectorXd& ninf, double amp, int k = 1) {
  TorusGrid g(1, cells);
  ConcentrationField f{g, Eigen::MatrixXd(2, cells), ninf, m};
  const Eigen::VectorXd w = vec({m(1), -m(0)});
  for (int r = 0; r < cells; ++r) f.n.col(r) = ninf + amp * std::sin(2 * kPi * k * g.coord(r, 0)) * w;
  return f;
}

}  // namespace

TEST(Spectral, DerivativeOfTrigonometricModes) {
  const TorusGrid g(1, 64);
  Eigen::RowVectorXd s(64), c(64);
  for (int r = 0; r < 64; ++r) {
    s(r) = std::sin(2 * kPi * 3 * g.coord(r, 0));
    c(r) = std::cos(2 * kPi * 3 * g.coord(r, 0));
  }
  EXPECT_LE((spectral_derivative(s, g, 0, 1) - 6 * kPi * c).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LE((spectral_derivative(s, g, 0, 2) + 36 * kPi * kPi * s).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Spectral, TwoDimensionalAxes) {
  const TorusGrid g(2, 16);
  Eigen::RowVectorXd f(g.size()), fy(g.size());
  for (int r = 0; r < g.size(); ++r) {
    f(r) = std::sin(2 * kPi * g.coord(r, 1));
    fy(r) = 2 * kPi * std::cos(2 * kPi * g.coord(r, 1));
  }
  EXPECT_LE(spectral_derivative(f, g, 0, 1).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((spectral_derivative(f, g, 1, 1) - fy).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Spectral, SobolevNormClosedForm) {
  const TorusGrid g(1, 128);
  Eigen::MatrixXd s(1, 128);
  for (int r = 0; r < 128; ++r) s(0, r) = std::sin(2 * kPi * g.coord(r, 0));
  EXPECT_NEAR(hs_norm_squared(s, g, 0), 0.5, 1e-12);
  EXPECT_NEAR(hs_norm_squared(s, g, 1), 0.5 + 2 * kPi * kPi, 1e-10);
  EXPECT_NEAR(hs_norm_squared(s, g, 2), 0.5 + 2 * kPi * kPi + 8 * std::pow(kPi, 4), 1e-7);
  EXPECT_NEAR(l2_norm(s, g), std::sqrt(0.5), 1e-12);
  EXPECT_THROW(hs_norm(s, g, -1), Error);
}

TEST(Spectral, FiniteDifferenceOrders) {
  // Error ratio under grid doubling approaches 2^accuracy.
  for (int acc : {2, 4, 6}) {
    double err[2];
    for (int k = 0; k < 2; ++k) {
      const int cells = 16 << k;
      const TorusGrid g(1, cells);
      Eigen::RowVectorXd f(cells), df(cells);
      for (int r = 0; r < cells; ++r) {
        f(r) = std::sin(2 * kPi * g.coord(r, 0));
        df(r) = 2 * kPi * std::cos(2 * kPi * g.coord(r, 0));
      }
      err[k] = (fd_derivative(f, g, 0, acc) - df).cwiseAbs().maxCoeff();
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), acc, 0.2) << "accuracy " << acc;
  }
  EXPECT_THROW(fd_derivative(Eigen::RowVectorXd::Zero(8), TorusGrid(1, 8), 0, 3), Error);
}

TEST(FickSolver, InitialValidationNamesFailures) {
  const Eigen::VectorXd m = vec({1, 3}), ninf = vec({1, 2});
  ConcentrationField ok = mode_field(64, m, ninf, 1e-3);
  EXPECT_TRUE(validate_initial(ok, 0.5, 1.0, 1).ok());
  ConcentrationField bad = ok;
  bad.n.row(0).array() += 1e-3;  // nonzero mean and broken closure
  const InitialReport r = validate_initial(bad, 0.5, 1.0, 1);
  ASSERT_FALSE(r.ok());
  bool mean = false, closure = false;
  for (const auto& f : r.failures) {
    mean |= f.find("mean") != std::string::npos;
    closure |= f.find("closure") != std::string::npos;
  }
  EXPECT_TRUE(mean && closure);
  ConcentrationField big = mode_field(64, m, ninf, 0.2);
  EXPECT_FALSE(validate_initial(big, 0.5, 1.0, 1).ok());
}

TEST(FickSolver, ConservationAndMonotoneDecay) {
  const Eigen::VectorXd m = vec({1, 3}), ninf = vec({1, 2});
  ConcentrationField f = mode_field(128, m, ninf, 1e-2);
  FickSolver solver(model_abar(m), false);
  const DecayReport d = run_fick(f, solver, 0.1, 1e-4, 1);
  EXPECT_EQ(d.t.size(), 1001u);
  EXPECT_LE(d.max_mean_drift, 1e-10);
  EXPECT_LE(d.max_closure_drift, 1e-10);
  EXPECT_TRUE(d.monotone);
  EXPECT_GT(d.rate, 0.0);
  EXPECT_GT(d.min_positivity, 0.0);
}

TEST(FickSolver, SingleModeRateMatchesSymbolOracle) {
  // Frozen coefficients, mode k: rate = -beta_A (2 - 2 cos(2 pi k h)) / h^2, beta_A the
  // eigenvalue of A = N abar on the closure direction.
  const Eigen::VectorXd m = vec({1, 3}), ninf = vec({1, 2});
  const AbarProvider ab = model_abar(m);
  const Eigen::MatrixXd A = ninf.asDiagonal() * ab(ninf);
  const Eigen::VectorXd w = vec({m(1), -m(0)});
  const double beta = w.dot(A * w) / w.squaredNorm();
  ASSERT_LE((A * w - beta * w).norm(), 1e-14);
  for (int k : {1, 2}) {
    const int cells = 64;
    const double h = 1.0 / cells;
    const double oracle = -beta * (2.0 - 2.0 * std::cos(2 * kPi * k * h)) / (h * h);
    ConcentrationField f = mode_field(cells, m, ninf, 1e-3, k);
    FickSolver solver(frozen_provider(ab(ninf)), true);
    const double dt = 1e-4 / (k * k);
    const DecayReport d = run_fick(f, solver, 0.2 / (k * k), dt, 0);
    // Backward Euler decays by 1 / (1 + dt r) per step.
    const double expected = std::log1p(dt * oracle) / dt;
    EXPECT_NEAR(d.rate, expected, 1e-6 * expected) << "k = " << k;
    EXPECT_NEAR(d.rate, oracle, 0.02 * oracle);
  }
}

TEST(FickSolver, OperatorAnnihilatesConstants) {
  const TorusGrid g(2, 8);
  std::vector<Eigen::MatrixXd> A(g.size(), Eigen::MatrixXd::Identity(2, 2));
  const Eigen::SparseMatrix<double> D = fick_operator(g, A);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(2 * g.size());
  EXPECT_LE((D * one).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(fick_operator(g, std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Identity(2, 2))), Error);
}

TEST(FickSolver, RescalingResidualSelectsCanonicalExponent) {
  const Eigen::VectorXd m = vec({1, 3}), ninf = vec({1, 2});
  const Eigen::VectorXd c = vec({3e-3, -1e-3}), a = vec({3e-2, -1e-2}), b = vec({0.3, -0.1});
  const RescalingReport good = rescaling_residual(model_abar(m), ninf, m, c, a, b, -2.0, 0.5);
  const RescalingReport bad = rescaling_residual(model_abar(m), ninf, m, c, a, b, -1.5, 0.5);
  EXPECT_LT(good.max_residual, 1e-4 * good.scale);
  EXPECT_GT(bad.max_residual, 10.0 * good.max_residual);
  EXPECT_THROW(rescaling_residual(model_abar(m), ninf, m, vec({1, 1}), a, b, -2.0, 0.5), Error);
}

TEST(FickSolver, KernelDriftIsQuadratic) {
  const Eigen::VectorXd m = vec({1, 3}), ninf = vec({1, 2});
  const TorusGrid g(1, 128);
  Eigen::MatrixXd gg(2, 128);
  for (int r = 0; r < 128; ++r) gg.col(r) = 0.1 * std::sin(2 * kPi * g.coord(r, 0)) * vec({m(1), -m(0)});
  const KernelDriftReport a = kernel_drift_check(gg, g, ninf, m);
  const KernelDriftReport b = kernel_drift_check(0.5 * gg, g, ninf, m);
  EXPECT_TRUE(a.holds);
  EXPECT_NEAR(std::log2(a.lhs / b.lhs), 2.0, 0.05);
}

TEST(FickSolver, QuasilinearProviderCaches) {
  fickkin::testing::OperatorSetup& s = fickkin::testing::small_setup(0);
  QuasilinearProvider q(s.blocks, s.mix, s.grid, 1e-2);
  const Eigen::MatrixXd a = q(vec({1.001, 2.0}));
  const Eigen::MatrixXd b = q(vec({1.002, 2.0}));
  EXPECT_EQ(q.misses(), 1u);
  EXPECT_EQ((a - b).norm(), 0.0);
  q(vec({1.2, 2.0}));
  EXPECT_EQ(q.cache_size(), 2u);
}

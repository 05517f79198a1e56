#include "aim/qp.hpp"
#include "support/brute_force_qp.hpp"
#include "support/random_qp.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace aim;
using QP = qp::QuadraticProgram<double>;

namespace {

QP make(Eigen::MatrixXd P, Eigen::VectorXd q, Eigen::MatrixXd G, Eigen::VectorXd h) {
  return QP{std::move(P), std::move(q), std::move(G), std::move(h)};
}

} // namespace

TEST(Qp, ProjectsOntoHalfline) {
  // (z - 1)^2 = z^2 - 2z + 1  ->  P = 2, q = -2
  auto qp = make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, -2.0),
                 Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1));
  auto sol = qp::solve(qp);
  ASSERT_EQ(sol.status, qp::Status::Optimal);
  EXPECT_NEAR(sol.z(0), 0.0, 1e-6);
  EXPECT_TRUE(oracle::kkt_ok(qp, sol.z, sol.y, 1e-6));
}

TEST(Qp, ActiveSumConstraint) {
  Eigen::MatrixXd G(1, 2);
  G << 1.0, 1.0;
  auto qp = make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1.0, -1.0), G, Eigen::VectorXd::Ones(1));
  auto sol = qp::solve(qp);
  ASSERT_EQ(sol.status, qp::Status::Optimal);
  EXPECT_NEAR(sol.z(0), 0.5, 1e-6);
  EXPECT_NEAR(sol.z(1), 0.5, 1e-6);
  EXPECT_NEAR(sol.y(0), 0.5, 1e-6);
}

TEST(Qp, UnconstrainedUsesStationarity) {
  Eigen::MatrixXd P(2, 2);
  P << 2.0, 0.0, 0.0, 0.0;
  auto qp = make(P, Eigen::Vector2d(-4.0, 0.0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0));
  auto sol = qp::solve(qp);
  ASSERT_EQ(sol.status, qp::Status::Optimal);
  EXPECT_NEAR(sol.z(0), 2.0, 1e-9);
  EXPECT_NEAR(sol.z(1), 0.0, 1e-9); // least-norm
}

TEST(Qp, UnconstrainedUnboundedDetected) {
  auto qp = make(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0));
  EXPECT_EQ(qp::solve(qp).status, qp::Status::Unbounded);
}

TEST(Qp, InfeasibleDetectedWithCertificate) {
  Eigen::MatrixXd G(2, 1);
  G << 1.0, -1.0;
  auto qp = make(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), G, Eigen::Vector2d(-1.0, -1.0));
  auto sol = qp::solve(qp);
  ASSERT_EQ(sol.status, qp::Status::PrimalInfeasible);
  ASSERT_EQ(sol.certificate.size(), 2);
  EXPECT_GE(sol.certificate.minCoeff(), 0.0);
  EXPECT_LT(qp.h.dot(sol.certificate), 0.0);
  EXPECT_LT((G.transpose() * sol.certificate).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Qp, RejectsBadInput) {
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(qp::solve(make(asym, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               std::invalid_argument);
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(qp::solve(make(indefinite, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               std::invalid_argument);
  EXPECT_THROW(qp::solve(make(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Ones(1, 3),
                              Eigen::VectorXd::Zero(1))),
               std::invalid_argument);
}

TEST(Qp, SmallExamplesAgreeWithGrid) {
  auto halfline = make(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Constant(1, -2.0),
                       Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Zero(1));
  auto ref1 = oracle::brute_force_reference(halfline, {Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0), 1e-3});
  ASSERT_TRUE(ref1);
  EXPECT_NEAR(qp::solve(halfline).z(0), ref1->z(0), 2e-3);

  Eigen::MatrixXd G(1, 2);
  G << 1.0, 1.0;
  auto sum = make(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(-1.0, -1.0), G, Eigen::VectorXd::Ones(1));
  auto ref2 = oracle::brute_force_reference(sum, {Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0), 1e-3});
  ASSERT_TRUE(ref2);
  const auto z = qp::solve(sum).z;
  EXPECT_LT((z - ref2->z).cwiseAbs().maxCoeff(), 2e-3);
}

TEST(Qp, GridReportsEmptyBox) {
  auto qp = make(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1.0),
                 Eigen::VectorXd::Constant(1, -5.0));
  EXPECT_FALSE(oracle::brute_force_reference(qp, {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0), 0.01}));
}

TEST(Qp, RandomInstancesMatchGridOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3;
    const auto r = oracle::random_qp(rng, n);
    const auto sol = qp::solve(r.qp);
    ASSERT_EQ(sol.status, qp::Status::Optimal) << "trial " << trial;
    EXPECT_TRUE(oracle::kkt_ok(r.qp, sol.z, sol.y, 1e-6)) << "trial " << trial;

    const double step = oracle::grid_step_for(n);
    const auto ref = oracle::brute_force_reference(
        r.qp, {Eigen::VectorXd::Constant(n, -r.box), Eigen::VectorXd::Constant(n, r.box), step});
    ASSERT_TRUE(ref);
    const double f = r.qp.objective(sol.z);
    EXPECT_LE(f, ref->objective + 1e-6 * (1.0 + std::abs(f)));
    EXPECT_LE(ref->objective - f, oracle::grid_gap_bound(r, sol.z, step));
  }
}

TEST(Qp, ScalingTheObjectiveKeepsTheMinimizer) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = oracle::random_qp(rng, 3);
    // strictly convex so the minimizer is unique
    r.qp.P += 0.5 * Eigen::MatrixXd::Identity(3, 3);
    const auto base = qp::solve(r.qp);
    for (double alpha : {0.01, 7.0, 300.0}) {
      auto scaled = r.qp;
      scaled.P *= alpha;
      scaled.q *= alpha;
      const auto sol = qp::solve(scaled);
      ASSERT_EQ(sol.status, qp::Status::Optimal);
      EXPECT_LT((sol.z - base.z).cwiseAbs().maxCoeff(), 10 * 1e-6 * (1.0 + base.z.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Qp, WarmStartReachesSameSolution) {
  std::mt19937_64 rng(8);
  auto r = oracle::random_qp(rng, 4);
  r.qp.P += Eigen::MatrixXd::Identity(4, 4);
  const auto cold = qp::solve(r.qp);
  const auto warm = qp::solve(r.qp, qp::Settings<double>{}, qp::WarmStart<double>{cold.z, cold.y});
  ASSERT_EQ(warm.status, qp::Status::Optimal);
  EXPECT_LT((warm.z - cold.z).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LE(warm.iterations, cold.iterations);
}

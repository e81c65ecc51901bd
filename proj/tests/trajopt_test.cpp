#include "ltcar/trajopt.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "ltcar/errors.hpp"
#include "ltcar/manifold.hpp"
#include "ltcar/params.hpp"

namespace ltcar::trajopt {
namespace {

const Plant kPlant{car_preset("sports")};

struct Cornering {
  Vec6 x0;
  Vec3 u;
  double v, a_lat;
};

Cornering steady_corner(double v, double a_lat) {
  const auto p = manifold::solve_point(v, a_lat, {},
                                       manifold::EquilibriumSystem{kPlant.car});
  Cornering c;
  c.v = v;
  c.a_lat = a_lat;
  c.x0 << 0, 0, 0, v * std::cos(p.x.beta), v * std::sin(p.x.beta), a_lat / v;
  c.u << p.x.delta, p.x.kappa_r, 0.0;
  return c;
}

Trajectory corner_trajectory(std::size_t n, double dt = 0.01) {
  const Cornering c = steady_corner(20.0, 6.0);
  std::vector<Vec3> u(n, c.u);
  // A gentle steer variation so the trajectory is not an equilibrium.
  for (std::size_t k = 0; k < n; ++k) {
    u[k][0] += 0.004 * std::sin(2.0 * k * dt);
  }
  return integrate(c.x0, u, dt, kPlant);
}

// A desired curve that is the trajectory shifted sideways, with a speed bump
// and inputs offset: not a trajectory.
Curve offset_desired(const Trajectory& traj) {
  Curve d = traj.curve();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double t = d.time(k);
    d.x[k][0] += 0.5 * std::sin(t);
    d.x[k][1] += 0.8 * t;
    d.x[k][3] += 0.3 * t;
    d.u[k][0] += 0.002;
  }
  return d;
}

Weights rear_drive_weights() {
  Weights w;
  w.active << true, true, false;
  return w;
}

TEST(Integrate, StraightRollingKeepsSpeed) {
  const std::size_t n = 201;
  const Trajectory tr =
      integrate((Vec6() << 1.0, 2.0, 0.0, 20.0, 0.0, 0.0).finished(),
                std::vector<Vec3>(n, Vec3::Zero()), 0.01, kPlant);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_NEAR(tr.x(k)[0], 1.0 + 20.0 * tr.curve().time(k), 1e-9);
    EXPECT_NEAR(tr.x(k)[1], 2.0, 1e-12);
    EXPECT_NEAR(tr.x(k)[3], 20.0, 1e-12);
  }
}

TEST(Integrate, EquilibriumInputDrivesACircle) {
  const Cornering c = steady_corner(20.0, 6.0);
  const std::size_t n = 501;
  const Trajectory tr = integrate(c.x0, std::vector<Vec3>(n, c.u), 0.01, kPlant);
  const double R = c.v * c.v / c.a_lat;
  const double chi = std::atan2(c.x0[4], c.x0[3]);
  // Center sits a radius away, normal to the velocity on the turning side.
  const Eigen::Vector2d center(-R * std::sin(chi), R * std::cos(chi));
  for (std::size_t k = 0; k < n; k += 50) {
    EXPECT_NEAR((tr.x(k).head<2>() - center).norm(), R, 1e-6 * R);
    EXPECT_NEAR(tr.x(k)[5], c.x0[5], 1e-8);
  }
}

double observed_order(const std::function<Vec6(double)>& terminal) {
  const Vec6 a = terminal(0.02), b = terminal(0.01), c = terminal(0.005);
  return std::log2((a - b).norm() / (b - c).norm());
}

TEST(Integrate, FourthOrderOnConstantCorneringInput) {
  const Vec6 x0 = (Vec6() << 0, 0, 0, 25.0, 0, 0).finished();
  const Vec3 u(0.03, 0.02, 0.0);
  const double T = 2.0;
  const double order = observed_order([&](double dt) {
    const auto n = static_cast<std::size_t>(std::lround(T / dt)) + 1;
    return integrate(x0, std::vector<Vec3>(n, u), dt, kPlant).x(n - 1);
  });
  EXPECT_GE(order, 3.5);
}

TEST(Integrate, FourthOrderOnSmoothTimeVaryingInput) {
  const Vec6 x0 = (Vec6() << 0, 0, 0, 25.0, 0, 0).finished();
  const double T = 2.0;
  const auto input = [](double t) {
    return Vec3(0.03 * std::sin(1.5 * t), 0.02 * (1 - std::cos(t)), 0.0);
  };
  const double order = observed_order([&](double dt) {
    const auto steps = static_cast<std::size_t>(std::lround(T / dt));
    return integrate_states(x0, input, dt, steps, kPlant).back();
  });
  EXPECT_GE(order, 3.5);
}

TEST(Integrate, WheelieRampAbortsWithTime) {
  Plant tall = kPlant;
  tall.car.vehicle.h = 0.9;
  const double dt = 0.01;
  std::vector<Vec3> u;
  for (int k = 0; k <= 200; ++k) u.emplace_back(0.0, 0.3 * k * dt, 0.0);
  try {
    integrate((Vec6() << 0, 0, 0, 20.0, 0, 0).finished(), u, dt, tall);
    FAIL() << "expected an ill-posed abort";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.kind(), NumericFailure::kIllPosedModel);
    ASSERT_TRUE(e.time().has_value());
    EXPECT_GT(*e.time(), 0.0);
    EXPECT_LT(*e.time(), 2.0);
  }
}

TEST(Trajectory, AdoptChecksTheDefect) {
  const Trajectory tr = corner_trajectory(101);
  EXPECT_NO_THROW(Trajectory::adopt(tr.curve(), kPlant));
  Curve bad = tr.curve();
  bad.x[50][1] += 0.01;
  EXPECT_THROW(Trajectory::adopt(bad, kPlant), std::invalid_argument);
}

TEST(Riccati, DoubleIntegratorReachesAnalyticGain) {
  const std::size_t n = 2001;
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const RiccatiResult r = riccati_gains(std::vector<Eigen::MatrixXd>(n, A),
                                        std::vector<Eigen::MatrixXd>(n, B),
                                        Eigen::MatrixXd::Identity(2, 2),
                                        Eigen::MatrixXd::Identity(1, 1),
                                        Eigen::MatrixXd::Zero(2, 2), 0.01);
  EXPECT_NEAR(r.K[0](0, 0), 1.0, 1e-6);
  EXPECT_NEAR(r.K[0](0, 1), std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(r.P[0](0, 0), std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(r.P[0](0, 1), 1.0, 1e-6);
  EXPECT_EQ(r.K[n - 1].norm(), 0.0);
}

TEST(Riccati, ScalarFiniteHorizonIsTanh) {
  // -dP/dt = 1 - P^2 with P(T) = 0 gives P(t) = tanh(T - t).
  const std::size_t n = 301;
  const double dt = 0.01;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const RiccatiResult r =
      riccati_gains(std::vector<Eigen::MatrixXd>(n, zero),
                    std::vector<Eigen::MatrixXd>(n, one), one, one, zero, dt);
  for (std::size_t k = 0; k < n; k += 30) {
    EXPECT_NEAR(r.K[k](0, 0), std::tanh((n - 1 - k) * dt), 1e-8);
  }
}

TEST(Riccati, BlowUpIsReportedWithTime) {
  // -dP/dt = -1 - P^2 escapes to -infinity a quarter period before T.
  const std::size_t n = 301;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  try {
    riccati_gains(std::vector<Eigen::MatrixXd>(n, zero),
                  std::vector<Eigen::MatrixXd>(n, one), -one, one, zero, 0.01);
    FAIL() << "expected blow-up";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.kind(), NumericFailure::kRiccatiBlowUp);
    ASSERT_TRUE(e.time());
    EXPECT_NEAR(3.0 - *e.time(), M_PI / 2, 0.02);
  }
}

TEST(DesignGain, ZeroWeightsGiveZeroGain) {
  Weights w;
  w.Q_K.setZero();
  const GainSchedule K = design_gain(corner_trajectory(51), w, kPlant);
  for (const Mat36& k : K) EXPECT_EQ(k.norm(), 0.0);
}

TEST(DesignGain, RejectsIndefiniteInputWeight) {
  Weights w;
  w.R_K(1, 1) = -1.0;
  EXPECT_THROW(design_gain(corner_trajectory(11), w, kPlant),
               std::invalid_argument);
}

TEST(DesignGain, StraightLineGainSettlesToConstant) {
  const std::size_t n = 801;
  const Trajectory tr =
      integrate((Vec6() << 0, 0, 0, 20.0, 0, 0).finished(),
                std::vector<Vec3>(n, Vec3::Zero()), 0.01, kPlant);
  const GainSchedule K = design_gain(tr, Weights{}, kPlant);
  EXPECT_LT((K[0] - K[100]).norm(), 1e-4 * K[0].norm());
  EXPECT_GT((K[0] - K[n - 1]).norm(), 0.1 * K[0].norm());
}

TEST(DesignGain, ClosedLoopStableAtMidHorizon) {
  const Trajectory tr = corner_trajectory(601);
  const std::size_t k = 300;
  Mat6 A;
  Mat63 B;
  linearize(kPlant, tr.x(k), tr.u(k), A, B);
  for (GainDesign m : {GainDesign::kSampled, GainDesign::kContinuous}) {
    const GainSchedule K = design_gain(tr, Weights{}, kPlant, m);
    const Eigen::EigenSolver<Mat6> es(A - B * K[k]);
    EXPECT_LT(es.eigenvalues().real().maxCoeff(), 0.0) << to_string(m);
  }
}

TEST(DesignGain, SampledGainStabilizesTheHeldInputLoop) {
  const Trajectory tr = corner_trajectory(601);
  const Linearization lin = linearize_trajectory(tr, kPlant);
  const GainSchedule K = sampled_gain(lin, Weights{}, tr.dt());
  for (std::size_t k : {0u, 150u, 300u, 450u}) {
    const Eigen::EigenSolver<Mat6> es(lin.A[k] - lin.B[k] * K[k]);
    EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0) << "k = " << k;
  }
}

TEST(DesignGain, SampledApproachesContinuousAsStepShrinks) {
  const Vec6 x0 = (Vec6() << 0, 0, 0, 20.0, 0, 0).finished();
  auto gap = [&](double dt) {
    const auto n = static_cast<std::size_t>(std::lround(0.2 / dt)) + 1;
    const Trajectory tr =
        integrate(x0, std::vector<Vec3>(n, Vec3::Zero()), dt, kPlant);
    const Mat36 ks = design_gain(tr, Weights{}, kPlant, GainDesign::kSampled)[0];
    const Mat36 kc =
        design_gain(tr, Weights{}, kPlant, GainDesign::kContinuous)[0];
    return (ks - kc).norm() / kc.norm();
  };
  // First order in dt: quartering the step divides the gap by about four.
  const double coarse = gap(1e-3), fine = gap(2.5e-4);
  EXPECT_NEAR(coarse / fine, 4.0, 0.6);
  EXPECT_LT(fine, 0.1);
}

TEST(DesignGain, NamesRoundTrip) {
  for (GainDesign m : {GainDesign::kSampled, GainDesign::kContinuous}) {
    EXPECT_EQ(gain_design_from_string(to_string(m)), m);
  }
  EXPECT_THROW(gain_design_from_string("lqr"), std::invalid_argument);
}

TEST(DesignGain, MaskedInputGetsNoFeedback) {
  const GainSchedule K =
      design_gain(corner_trajectory(51), rear_drive_weights(), kPlant);
  for (const Mat36& k : K) EXPECT_EQ(k.row(2).norm(), 0.0);
}

TEST(Project, IdempotentOnTrajectories) {
  const Trajectory tr = corner_trajectory(301);
  const Trajectory p = project(tr.curve(), design_gain(tr, Weights{}, kPlant),
                               kPlant);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    EXPECT_LE((p.x(k) - tr.x(k)).norm(), 1e-9);
    EXPECT_LE((p.u(k) - tr.u(k)).norm(), 1e-12);
  }
}

TEST(Project, PullsPerturbedStatesBack) {
  const Trajectory tr = corner_trajectory(401);
  Curve pert = tr.curve();
  for (std::size_t k = 0; k < pert.size(); ++k) pert.x[k][1] += 1.0;
  const GainSchedule K = design_gain(tr, Weights{}, kPlant);
  const Trajectory closed = project(pert, K, kPlant);
  const Trajectory open = integrate(pert.x[0], pert.u, pert.dt, kPlant);
  double e_closed = 0, e_open = 0;
  for (std::size_t k = 0; k < pert.size(); ++k) {
    e_closed += (closed.x(k) - pert.x[k]).head<2>().squaredNorm();
    e_open += (open.x(k) - pert.x[k]).head<2>().squaredNorm();
  }
  EXPECT_LT(e_closed, 0.5 * e_open);
}

TEST(Cost, ZeroOnDesiredAndLinearInQ) {
  const Trajectory tr = corner_trajectory(101);
  EXPECT_EQ(cost(tr.curve(), tr.curve(), Weights{}), 0.0);
  const Curve d = offset_desired(tr);
  Weights w;
  w.R.setZero();
  w.P1.setZero();
  const double g1 = cost(tr.curve(), d, w);
  w.Q *= 2;
  EXPECT_NEAR(cost(tr.curve(), d, w), 2 * g1, 1e-12 * g1);
}

TEST(Cost, HandComputedTwoSampleCase) {
  Curve a, b;
  a.dt = b.dt = 0.5;
  a.x = {Vec6::Zero(), Vec6::Zero()};
  a.u = {Vec3::Zero(), Vec3::Zero()};
  b = a;
  b.x[0][0] = 1.0;
  b.x[1][1] = 2.0;
  b.u[1][2] = 1.0;
  Weights w;
  w.Q.setIdentity();
  w.R.setIdentity();
  w.P1.setIdentity();
  // 1/2 (0.25 * 1 + 0.25 * (4 + 1)) + 1/2 * 4
  EXPECT_DOUBLE_EQ(cost(a, b, w), 2.75);
  Curve c = a;
  c.x.pop_back();
  c.u.pop_back();
  EXPECT_THROW(cost(c, b, w), std::invalid_argument);
}

class DescentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    traj_.emplace(corner_trajectory(301));
    desired_ = offset_desired(*traj_);
    K_ = design_gain(*traj_, w_, kPlant);
    lin_ = linearize_trajectory(*traj_, kPlant);
  }
  Weights w_;
  std::optional<Trajectory> traj_;
  Curve desired_;
  GainSchedule K_;
  Linearization lin_;
};

TEST_F(DescentTest, AdjointSlopeMatchesFiniteDifferences) {
  std::mt19937 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Smooth random input perturbation.
    const double a = n(rng), b = n(rng), c = n(rng), f = 1 + std::abs(n(rng));
    std::vector<Vec3> v(traj_->size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double t = traj_->curve().time(k);
      v[k] << 0.01 * a * std::sin(f * t), 0.01 * b * std::cos(f * t),
          0.01 * c * t;
    }
    const std::vector<Vec6> z = propagate_tangent(lin_, v);
    const double adj = directional_derivative(*traj_, desired_, w_, lin_, v);
    auto g_at = [&](double eps) {
      Curve cc = traj_->curve();
      for (std::size_t k = 0; k < cc.size(); ++k) {
        cc.x[k] += eps * z[k];
        cc.u[k] += eps * v[k];
      }
      return cost(project(cc, K_, kPlant).curve(), desired_, w_);
    };
    const double eps = 1e-6;
    const double fd = (g_at(eps) - g_at(-eps)) / (2 * eps);
    EXPECT_NEAR(adj, fd, 1e-4 * std::abs(fd)) << "trial " << trial;
  }
}

TEST_F(DescentTest, DirectionIsTangentDescentAndLqOptimal) {
  const Direction d = descent_direction(*traj_, desired_, K_, w_, kPlant, lin_);
  EXPECT_LT(d.slope, 0.0);
  EXPECT_NEAR(d.slope, directional_derivative(*traj_, desired_, w_, lin_, d.v),
              1e-9 * std::abs(d.slope));
  for (std::size_t k = 0; k + 1 < d.z.size(); ++k) {
    const Vec6 next = lin_.A[k] * d.z[k] + lin_.B[k] * d.v[k];
    EXPECT_LE((next - d.z[k + 1]).norm(), 1e-8 * std::max(1.0, next.norm()));
  }
  EXPECT_EQ(d.z[0].norm(), 0.0);

  // Stationarity of the quadratic model Dg.zeta + 1/2 H(zeta, zeta): its
  // derivative along any other tangent vanishes at the minimizer.
  const std::size_t n = d.z.size();
  std::mt19937 rng(4);
  std::normal_distribution<double> nd(0.0, 0.01);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Vec3> v2(n);
    for (auto& e : v2) e << nd(rng), nd(rng), nd(rng);
    const std::vector<Vec6> z2 = propagate_tangent(lin_, v2);
    double h = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double wk = (k == 0 || k + 1 == n) ? 0.005 : 0.01;
      h += wk * (d.z[k].dot(w_.Q * z2[k]) + d.v[k].dot(w_.R * v2[k]));
    }
    h += d.z[n - 1].dot(w_.P1 * z2[n - 1]);
    const double g = directional_derivative(*traj_, desired_, w_, lin_, v2);
    EXPECT_NEAR(g + h, 0.0, 1e-8 * (std::abs(g) + std::abs(h)));
  }
}

TEST_F(DescentTest, StationaryWhenDesiredIsTheTrajectory) {
  const Direction d =
      descent_direction(*traj_, traj_->curve(), K_, w_, kPlant, lin_);
  EXPECT_EQ(d.slope, 0.0);
  for (const Vec3& v : d.v) EXPECT_EQ(v.norm(), 0.0);
}

TEST_F(DescentTest, MaskedInputIsNotMoved) {
  const Weights w = rear_drive_weights();
  const Direction d = descent_direction(*traj_, desired_, K_, w, kPlant, lin_);
  for (const Vec3& v : d.v) EXPECT_EQ(v[2], 0.0);
}

TEST_F(DescentTest, LineSearchBacktracksOnOverscaledStep) {
  const double g = cost(traj_->curve(), desired_, w_);
  const Direction d = descent_direction(*traj_, desired_, K_, w_, kPlant, lin_);
  const LineSearchResult full =
      line_search(*traj_, d, desired_, K_, w_, kPlant, g);
  ASSERT_TRUE(full.next);
  EXPECT_LT(full.cost, g);

  Direction big = d;
  for (auto& z : big.z) z *= 100;
  for (auto& v : big.v) v *= 100;
  big.slope *= 100;
  const LineSearchResult back =
      line_search(*traj_, big, desired_, K_, w_, kPlant, g);
  ASSERT_TRUE(back.next);
  EXPECT_LT(back.gamma, 1.0);
  EXPECT_LT(back.cost, g);
}

TEST_F(DescentTest, LineSearchRefusesAscent) {
  const double g = cost(traj_->curve(), desired_, w_);
  Direction d = descent_direction(*traj_, desired_, K_, w_, kPlant, lin_);
  d.slope = -d.slope;
  EXPECT_FALSE(line_search(*traj_, d, desired_, K_, w_, kPlant, g).next);
}

TEST_F(DescentTest, NewtonModeProducesDescent) {
  const Direction d = descent_direction(*traj_, desired_, K_, w_, kPlant, lin_,
                                        HessianMode::kNewton);
  EXPECT_LT(d.slope, 0.0);
}

TEST(PoNewton, AlreadyOptimalStopsImmediately) {
  const Trajectory tr = corner_trajectory(201);
  const NewtonResult r = po_newton(tr, tr.curve(), Weights{}, kPlant);
  EXPECT_EQ(r.reason, StopReason::kConverged);
  ASSERT_EQ(r.log.size(), 1u);
  EXPECT_EQ(r.log[0].cost, 0.0);
}

TEST(PoNewton, ConvergesOnAReachableTarget) {
  // The target is itself a rollout with different inputs, so the optimum has
  // zero residual.
  const Trajectory tr = corner_trajectory(301);
  std::vector<Vec3> u = tr.curve().u;
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k][0] += 0.003 * std::sin(1.5 * tr.curve().time(k));
    u[k][1] += 0.005;
  }
  const Curve desired = integrate(tr.x(0), u, tr.dt(), kPlant).curve();
  const NewtonResult r = po_newton(tr, desired, Weights{}, kPlant);
  ASSERT_GE(r.log.size(), 2u);
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    EXPECT_LE(r.log[i].cost, r.log[i - 1].cost);
  }
  EXPECT_EQ(r.reason, StopReason::kConverged);
  EXPECT_LE(std::abs(r.log.back().grad_zeta), 1e-6 * (1 + r.log.back().cost));
  EXPECT_LT(r.log.back().cost, 1e-6 * r.log.front().cost);
}

TEST(PoNewton, MonotoneOnAnUnreachableTarget) {
  const Trajectory tr = corner_trajectory(301);
  const Curve desired = offset_desired(tr);
  const Weights w;
  const Trajectory start = project(desired, design_gain(tr, w, kPlant), kPlant);
  NewtonOptions opt;
  opt.max_iter = 10;
  const NewtonResult r = po_newton(start, desired, w, kPlant, opt);
  ASSERT_EQ(r.log.size(), 11u);
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    EXPECT_LT(r.log[i].cost, r.log[i - 1].cost);
    EXPECT_GT(r.log[i - 1].gamma, 0.0);
  }
  EXPECT_EQ(r.reason, StopReason::kMaxIterations);
}

TEST(PoNewton, StopReasonNames) {
  EXPECT_EQ(to_string(StopReason::kConverged), "converged");
  EXPECT_EQ(to_string(StopReason::kMaxIterations), "max-iterations");
  EXPECT_EQ(to_string(StopReason::kLineSearchStall), "line-search-stall");
}

TEST(PoNewton, NewtonModeIsMonotone) {
  const Trajectory tr = corner_trajectory(151);
  const Curve desired = offset_desired(tr);
  NewtonOptions opt;
  opt.mode = HessianMode::kNewton;
  opt.max_iter = 8;
  const NewtonResult r = po_newton(tr, desired, Weights{}, kPlant, opt);
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    EXPECT_LE(r.log[i].cost, r.log[i - 1].cost);
  }
  EXPECT_LT(r.log.back().cost, r.log.front().cost);
}

}  // namespace
}  // namespace ltcar::trajopt

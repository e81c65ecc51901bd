#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ltcar/errors.hpp"
#include "ltcar/trajopt.hpp"

namespace ltcar::trajopt {

namespace {

// Norm beyond which the Riccati solution is considered to have escaped.
constexpr double kBlowUpNorm = 1e12;
// Substep size as a fraction of the local rate bound; the floor caps the
// number of substeps per interval.
constexpr double kStiffStep = 0.2;
constexpr double kMinSubstep = 1e-4;

bool symmetric_psd(const Eigen::MatrixXd& M) {
  if (!M.allFinite() || !M.isApprox(M.transpose(), 1e-12)) return false;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  return es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, M.norm());
}

bool positive_definite(const Eigen::MatrixXd& M) {
  if (!M.allFinite() || !M.isApprox(M.transpose(), 1e-12)) return false;
  return Eigen::LLT<Eigen::MatrixXd>(M).info() == Eigen::Success;
}

std::vector<int> active_indices(const Weights& w) {
  std::vector<int> idx;
  for (int i = 0; i < 3; ++i) {
    if (w.active[i]) idx.push_back(i);
  }
  return idx;
}

}  // namespace

void Weights::validate() const {
  if (!positive_definite(R) || !positive_definite(R_K)) {
    throw std::invalid_argument("input weights R and R_K must be positive definite");
  }
  if (!symmetric_psd(Q) || !symmetric_psd(P1) || !symmetric_psd(Q_K)) {
    throw std::invalid_argument(
        "state weights Q, P1 and Q_K must be symmetric positive semidefinite");
  }
}

RiccatiResult riccati_gains(const std::vector<Eigen::MatrixXd>& A,
                            const std::vector<Eigen::MatrixXd>& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            const Eigen::MatrixXd& P_T, double dt) {
  if (A.empty() || A.size() != B.size()) {
    throw std::invalid_argument("Riccati sweep needs matching A and B samples");
  }
  if (!positive_definite(R)) {
    throw std::invalid_argument("Riccati input weight must be positive definite");
  }
  const Eigen::LLT<Eigen::MatrixXd> Rl(R);
  const std::size_t n = A.size();
  // Backward time tau = T - t turns the terminal-value problem into an
  // initial-value one: dP/dtau = A'P + PA - P B R^-1 B' P + Q.
  auto rhs = [&](const Eigen::MatrixXd& P, const Eigen::MatrixXd& Ak,
                 const Eigen::MatrixXd& Bk) -> Eigen::MatrixXd {
    const Eigen::MatrixXd BtP = Bk.transpose() * P;
    return Ak.transpose() * P + P * Ak - BtP.transpose() * Rl.solve(BtP) + Q;
  };

  // The sweep is stiff when the input authority is large, so each grid
  // interval is split until h times a bound on the local rate stays small.
  auto rate_bound = [&](const Eigen::MatrixXd& P, const Eigen::MatrixXd& Ak,
                        const Eigen::MatrixXd& Bk) {
    const Eigen::MatrixXd BtP = Bk.transpose() * P;
    const Eigen::MatrixXd G = Bk * Rl.solve(BtP);
    return 2.0 * (Ak.norm() + G.norm());
  };

  RiccatiResult out;
  out.P.resize(n);
  out.K.resize(n);
  out.P[n - 1] = P_T;
  for (std::size_t k = n - 1; k > 0; --k) {
    Eigen::MatrixXd P = out.P[k];
    double s = 0.0;
    while (s < 1.0) {
      const auto At = [&](double f) {
        return ((1 - f) * A[k] + f * A[k - 1]).eval();
      };
      const auto Bt = [&](double f) {
        return ((1 - f) * B[k] + f * B[k - 1]).eval();
      };
      const double lam = rate_bound(P, At(s), Bt(s));
      const double ds =
          std::min(1.0 - s, std::max(kMinSubstep, kStiffStep / (lam * dt)));
      const double h = ds * dt;
      const Eigen::MatrixXd Am = At(s + 0.5 * ds), Bm = Bt(s + 0.5 * ds);
      const Eigen::MatrixXd k1 = rhs(P, At(s), Bt(s));
      const Eigen::MatrixXd k2 = rhs(P + 0.5 * h * k1, Am, Bm);
      const Eigen::MatrixXd k3 = rhs(P + 0.5 * h * k2, Am, Bm);
      const Eigen::MatrixXd k4 = rhs(P + h * k3, At(s + ds), Bt(s + ds));
      P += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
      P = 0.5 * (P + P.transpose()).eval();
      s += ds;
      if (!P.allFinite() || P.norm() > kBlowUpNorm) {
        throw NumericError(NumericFailure::kRiccatiBlowUp,
                           "Riccati solution diverged",
                           (static_cast<double>(k) - s) * dt);
      }
    }
    out.P[k - 1] = std::move(P);
  }
  for (std::size_t k = 0; k < n; ++k) {
    out.K[k] = Rl.solve(B[k].transpose() * out.P[k]);
  }
  return out;
}

GainDesign gain_design_from_string(std::string_view name) {
  if (name == "sampled") return GainDesign::kSampled;
  if (name == "continuous") return GainDesign::kContinuous;
  throw std::invalid_argument("unknown gain design '" + std::string(name) +
                              "' (expected sampled or continuous)");
}

std::string_view to_string(GainDesign g) {
  return g == GainDesign::kSampled ? "sampled" : "continuous";
}

GainSchedule sampled_gain(const Linearization& lin, const Weights& w,
                          double dt) {
  w.validate();
  const std::vector<int> act = active_indices(w);
  const std::size_t n = lin.A.size() + 1;
  GainSchedule K(n, Mat36::Zero());
  if (act.empty() || lin.A.empty()) return K;

  const int na = static_cast<int>(act.size());
  Eigen::MatrixXd R(na, na);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j) R(i, j) = w.R_K(act[i], act[j]) * dt;
  }
  const Mat6 Q = w.Q_K * dt;
  Mat6 P = w.Q_K;
  Eigen::MatrixXd B(6, na);
  // The last sample has no step after it; it reuses the final step's gain.
  for (std::size_t k = n - 1; k-- > 0;) {
    const Mat6& A = lin.A[k];
    for (int j = 0; j < na; ++j) B.col(j) = lin.B[k].col(act[j]);
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd Kk = (R + BtP * B).ldlt().solve(BtP * A);
    P = Q + A.transpose() * P * (A - B * Kk);
    P = 0.5 * (P + P.transpose()).eval();
    if (!P.allFinite() || P.norm() > kBlowUpNorm) {
      throw NumericError(NumericFailure::kRiccatiBlowUp,
                         "Riccati solution diverged",
                         static_cast<double>(k) * dt);
    }
    for (int j = 0; j < na; ++j) K[k].row(act[j]) = Kk.row(j);
  }
  K[n - 1] = K[n - 2];
  return K;
}

GainSchedule design_gain(const Trajectory& traj, const Weights& w,
                         const Plant& plant, GainDesign method) {
  if (method == GainDesign::kSampled) {
    if (traj.size() < 2) {
      throw std::invalid_argument("gain design needs at least two samples");
    }
    return sampled_gain(linearize_trajectory(traj, plant), w, traj.dt());
  }
  w.validate();
  const std::vector<int> act = active_indices(w);
  const std::size_t n = traj.size();
  GainSchedule K(n, Mat36::Zero());
  if (act.empty()) return K;

  const int na = static_cast<int>(act.size());
  std::vector<Eigen::MatrixXd> A(n), B(n);
  for (std::size_t k = 0; k < n; ++k) {
    Mat6 Ak;
    Mat63 Bk;
    try {
      linearize(plant, traj.x(k), traj.u(k), Ak, Bk);
    } catch (const NumericError& e) {
      throw e.at_time(traj.curve().time(k));
    }
    A[k] = Ak;
    B[k].resize(6, na);
    for (int j = 0; j < na; ++j) B[k].col(j) = Bk.col(act[j]);
  }
  Eigen::MatrixXd R(na, na);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j) R(i, j) = w.R_K(act[i], act[j]);
  }
  const RiccatiResult ric = riccati_gains(A, B, w.Q_K, R, w.Q_K, traj.dt());
  for (std::size_t k = 0; k < n; ++k) {
    for (int j = 0; j < na; ++j) K[k].row(act[j]) = ric.K[k].row(j);
  }
  return K;
}

}  // namespace ltcar::trajopt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "glds/conditioning.hpp"
#include "glds/errors.hpp"
#include "glds/link.hpp"
#include "glds/stability.hpp"
#include "glds/trajectory.hpp"

namespace glds {

enum class IterateOption { last_iterate, uniform_random };

// Opt-in early-exit threshold on the pseudogradient norm.
inline constexpr double kEarlyExitGradTol = 1e-12;

struct GlmtronConfig {
  double w_bound = 1.0;  // Frobenius ball radius W
  double eta = 0.1;      // constant step size
  int m = 1;             // update count
  IterateOption option = IterateOption::last_iterate;
  std::uint64_t seed = 0;  // drives the uniform_random iterate draw
  bool record_history = false;
  bool early_exit = false;
};

struct HistoryRow {
  double param_err_sq = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
  double pred_err = std::numeric_limits<double>::quiet_NaN();
};

struct EstimateReport {
  WeightMatrix theta_hat;
  int iterations_run = 0;
  // 1-based index of the returned iterate: Theta^(1) is the zero initializer
  // and step t produces Theta^(t+1). last_iterate returns m+1; uniform_random
  // returns a t drawn from {1..m}.
  int chosen_iterate = 0;
  std::vector<HistoryRow> history;  // rows describe Theta^(1)..Theta^(m)
  double prediction_error = std::numeric_limits<double>::quiet_NaN();
  double eta = 0.0;
  int m = 0;
};

// Update direction (1/n) sum (sigma(Theta x_i) - x_{i+1}) x_i^T: the square
// loss gradient with the link derivative dropped.
inline WeightMatrix pseudogradient(const WeightMatrix& theta, const Trajectory& traj,
                                   const LinkFunction& link) {
  require_square_finite(theta);
  if (theta.rows() != traj.d) throw InvalidInputError("pseudogradient: dimension mismatch");
  if (traj.n < 1) throw InvalidInputError("pseudogradient: empty trajectory");
  const auto x = traj.inputs();
  return (apply_link(link, theta * x) - traj.targets()) * x.transpose() / traj.n;
}

// Euclidean projection onto the Frobenius ball of radius w_bound. stableNorm
// keeps huge-but-finite iterates from overflowing to an infinite norm, which
// would silently rescale them to zero instead of surfacing the blow-up.
inline WeightMatrix project_frobenius(const WeightMatrix& theta, double w_bound) {
  if (!(w_bound > 0.0)) throw InvalidInputError("project_frobenius: w_bound must be > 0");
  const double norm = theta.reshaped().stableNorm();
  if (norm <= w_bound) return theta;
  return theta * (w_bound / norm);
}

// (1/n) sum |sigma(A x_i) - sigma(B x_i)|^2 over the observed states.
inline double prediction_error(const WeightMatrix& theta_a, const WeightMatrix& theta_b,
                               const Trajectory& traj, const LinkFunction& link) {
  require_square_finite(theta_a);
  require_square_finite(theta_b);
  if (theta_a.rows() != traj.d || theta_b.rows() != traj.d) {
    throw InvalidInputError("prediction_error: dimension mismatch");
  }
  const auto x = traj.inputs();
  return (apply_link(link, theta_a * x) - apply_link(link, theta_b * x)).squaredNorm() /
         traj.n;
}

inline double parameter_error(const WeightMatrix& theta_hat, const WeightMatrix& theta_star) {
  if (theta_hat.rows() != theta_star.rows() || theta_hat.cols() != theta_star.cols()) {
    throw InvalidInputError("parameter_error: shape mismatch");
  }
  return (theta_hat - theta_star).squaredNorm();
}

// Projected pseudogradient descent from Theta^(1) = 0.
inline EstimateReport glmtron_fit(const Trajectory& traj, const LinkFunction& link,
                                  const GlmtronConfig& config,
                                  const std::optional<WeightMatrix>& theta_star = {}) {
  if (!(config.w_bound > 0.0)) throw InvalidInputError("glmtron_fit: w_bound must be > 0");
  if (!(config.eta > 0.0)) throw InvalidInputError("glmtron_fit: eta must be > 0");
  if (config.m < 1) throw InvalidInputError("glmtron_fit: m must be >= 1");
  if (traj.n < 1) throw InvalidInputError("glmtron_fit: empty trajectory");
  if (theta_star && theta_star->rows() != traj.d) {
    throw InvalidInputError("glmtron_fit: theta_star dimension mismatch");
  }

  const Eigen::MatrixXd x = traj.inputs();
  const Eigen::MatrixXd y = traj.targets();
  const int d = traj.d;
  const double inv_n = 1.0 / traj.n;

  Eigen::MatrixXd link_star;
  if (theta_star) link_star = apply_link(link, *theta_star * x);

  int chosen = config.m + 1;
  if (config.option == IterateOption::uniform_random) {
    Rng rng(derive_stream(config.seed));
    chosen = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(config.m));
  }

  EstimateReport report;
  report.eta = config.eta;
  report.m = config.m;
  report.chosen_iterate = chosen;
  if (config.record_history) report.history.reserve(config.m);

  WeightMatrix theta = WeightMatrix::Zero(d, d);
  WeightMatrix returned;
  bool have_returned = false;

  int t = 1;
  for (; t <= config.m; ++t) {
    if (config.option == IterateOption::uniform_random && t == chosen) {
      returned = theta;
      have_returned = true;
    }

    const Eigen::MatrixXd link_x = apply_link(link, theta * x);
    const Eigen::MatrixXd grad = (link_x - y) * x.transpose() * inv_n;
    const double grad_norm = grad.norm();

    if (config.record_history) {
      HistoryRow row;
      row.grad_norm = grad_norm;
      if (theta_star) {
        row.param_err_sq = (theta - *theta_star).squaredNorm();
        row.pred_err = (link_x - link_star).squaredNorm() * inv_n;
      }
      report.history.push_back(row);
    }

    if (config.early_exit && grad_norm <= kEarlyExitGradTol) break;

    theta = project_frobenius(theta - config.eta * grad, config.w_bound);
    if (!theta.allFinite()) {
      throw DivergenceError("glmtron_fit: iterate diverged (step size too large?)",
                            static_cast<std::size_t>(t));
    }
  }
  report.iterations_run = t - 1;

  if (config.option == IterateOption::uniform_random) {
    // If early exit stopped before the drawn index, the iterate has frozen.
    report.theta_hat = have_returned ? returned : theta;
  } else {
    report.theta_hat = theta;
  }

  if (theta_star) {
    report.prediction_error = prediction_error(report.theta_hat, *theta_star, traj, link);
  }
  return report;
}

// Least-squares baseline for the identity link. Optionally reports the
// condition number of the empirical covariance it inverts.
inline WeightMatrix ols_fit(const Trajectory& traj, double* condition_number = nullptr) {
  if (traj.n < 1) throw InvalidInputError("ols_fit: empty trajectory");
  const auto x = traj.inputs();
  const Eigen::MatrixXd s0 = (x * x.transpose()).eval();
  const Eigen::MatrixXd s0_sym = 0.5 * (s0 + s0.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s0_sym, Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  const double lambda_max = es.eigenvalues().maxCoeff();
  if (lambda_max <= 0.0 || lambda_min <= 1e-13 * lambda_max) {
    throw RankDeficiencyError("ols_fit: singular empirical covariance");
  }
  if (condition_number) *condition_number = lambda_max / lambda_min;
  const Eigen::MatrixXd s1 = traj.targets() * x.transpose();
  return s0_sym.ldlt().solve(s1.transpose()).transpose();
}

// Step size for experiment runs: 1 / (4 max(lambda_max(cov), 1)).
inline double practical_step(const Trajectory& traj) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(empirical_covariance(traj),
                                                    Eigen::EigenvaluesOnly);
  return 1.0 / (4.0 * std::max(es.eigenvalues().maxCoeff(), 1.0));
}

enum class ScheduleRegime { slow, fast, relu };

struct Schedule {
  double eta = 0.0;
  std::uint64_t m = 1;
};

// Theorem-prescribed step sizes and iteration counts with every unspecified
// absolute constant set to 1 (scaled by constant_scale); m is floored at 1.
// These steps are worst-case proof artifacts and far smaller than what works
// in practice; see practical_step.
inline Schedule theory_schedule(const LyapunovCertificate& cert, double zeta, double tau,
                                ScheduleRegime regime, std::uint64_t n, double w_bound,
                                double delta, double constant_scale = 1.0) {
  if (!(w_bound > 0.0) || !(delta > 0.0 && delta < 1.0) || n < 1 ||
      !(constant_scale > 0.0)) {
    throw InvalidInputError("theory_schedule: bad arguments");
  }
  const double r = cert.effective_radius;
  const double trace_k = cert.k_diag.sum();
  const double b = 4.0 * trace_k / (1.0 - cert.rho);
  const double d = static_cast<double>(cert.k_diag.size());
  const double nd = static_cast<double>(n);

  double eta = 0.0;
  double m_real = 1.0;
  switch (regime) {
    case ScheduleRegime::slow: {
      if (!(tau > 0.0)) throw InvalidInputError("theory_schedule: slow regime needs tau > 0");
      eta = 1.0 / (16.0 * r);
      const double c0 =
          w_bound * b / std::sqrt(tau * tau * d * r * std::log(4.0 * r / delta + 1.0));
      m_real = constant_scale * c0 * std::sqrt(nd);
      break;
    }
    case ScheduleRegime::fast: {
      if (!(zeta > 0.0)) throw InvalidInputError("theory_schedule: fast regime needs zeta > 0");
      if (!(tau > 0.0)) throw InvalidInputError("theory_schedule: fast regime needs tau > 0");
      eta = zeta * zeta / (16.0 * r * 16.0 * r);
      const double c2 = b * b / (zeta * zeta * zeta * zeta);
      m_real = constant_scale * c2 *
               std::log(1.0 + nd * w_bound * w_bound * b * b / (tau * tau * r));
      break;
    }
    case ScheduleRegime::relu: {
      eta = std::exp(-4.0 * cert.rho * r) / (16.0 * r * 16.0 * r);
      const double c0 = b * b * std::exp(8.0 * cert.rho * r);
      m_real = constant_scale * c0 * std::log(nd);
      break;
    }
  }

  Schedule schedule;
  schedule.eta = eta;
  if (!(m_real >= 1.0)) {
    schedule.m = 1;
  } else if (m_real >= 1e18) {
    schedule.m = static_cast<std::uint64_t>(1e18);
  } else {
    schedule.m = static_cast<std::uint64_t>(std::ceil(m_real));
  }
  return schedule;
}

}  // namespace glds

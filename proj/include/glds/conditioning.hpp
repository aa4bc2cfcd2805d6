#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "glds/errors.hpp"
#include "glds/link.hpp"
#include "glds/stability.hpp"
#include "glds/trajectory.hpp"

namespace glds {

// (1/n) sum x_i x_i^T over the covariates x_1..x_n; explicitly symmetrized.
inline Eigen::MatrixXd empirical_covariance(const Trajectory& traj) {
  Eigen::MatrixXd cov = traj.inputs() * traj.inputs().transpose() / traj.n;
  return 0.5 * (cov + cov.transpose());
}

// Eigenvalue extremes of the empirical covariance against its two-sided
// target: lambda_min >= 1/4 and lambda_max <= 4R.
struct IsometryReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  int n = 0;
  double R = 0.0;
};

inline IsometryReport isometry_report(const Trajectory& traj,
                                      const LyapunovCertificate& cert) {
  if (cert.k_diag.size() != traj.d) {
    throw InvalidInputError("isometry_report: certificate dimension mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(empirical_covariance(traj),
                                                    Eigen::EigenvaluesOnly);
  IsometryReport report;
  report.lambda_min = es.eigenvalues().minCoeff();
  report.lambda_max = es.eigenvalues().maxCoeff();
  report.n = traj.n;
  report.R = cert.effective_radius;
  report.lower_ok = report.lambda_min >= 0.25;
  report.upper_ok = report.lambda_max <= 4.0 * report.R;
  return report;
}

// Self-normalized cross term against its theoretical reference: cross_norm is
// the realized |(1/n) sum x_i e_i^T|_F, mu_bound the reference value with its
// absolute constant set to 1, b_bound the envelope B = 4 tr(K)/(1-rho).
struct CrossTermReport {
  double cross_norm = 0.0;
  double mu_bound = 0.0;
  double trace_cov = 0.0;
  double b_bound = 0.0;
};

inline CrossTermReport cross_term_report(const Trajectory& traj,
                                         const WeightMatrix& theta_star,
                                         const LinkFunction& link,
                                         const LyapunovCertificate& cert,
                                         double tau, double delta) {
  require_square_finite(theta_star);
  if (theta_star.rows() != traj.d || cert.k_diag.size() != traj.d) {
    throw InvalidInputError("cross_term_report: dimension mismatch");
  }
  if (!(tau >= 0.0) || !(delta > 0.0 && delta < 1.0)) {
    throw InvalidInputError("cross_term_report: need tau >= 0 and delta in (0,1)");
  }

  const auto x = traj.inputs();
  // Residuals e_i = x_{i+1} - sigma(Theta* x_i) recovered from the rollout.
  const Eigen::MatrixXd resid = traj.targets() - apply_link(link, theta_star * x);

  CrossTermReport report;
  report.cross_norm = (x * resid.transpose() / traj.n).norm();
  report.trace_cov = x.squaredNorm() / traj.n;

  const double trace_k = cert.k_diag.sum();
  const double gap = 1.0 - cert.rho;
  const double d = static_cast<double>(traj.d);
  const double n = static_cast<double>(traj.n);
  report.mu_bound =
      tau * std::sqrt(d * trace_k / (n * gap) * std::log(4.0 * trace_k / (delta * gap) + 1.0));
  report.b_bound = 4.0 * trace_k / gap;
  return report;
}

}  // namespace glds

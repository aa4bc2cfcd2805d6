#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "glds/errors.hpp"
#include "glds/link.hpp"
#include "glds/rng.hpp"
#include "glds/trajectory.hpp"

namespace glds {

inline double operator_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

inline double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Diagonal quadratic-norm contraction witness: K = diag(k_diag) with K >= I,
// rho < 1, and Theta^T K Theta <= rho K. The effective radius tr(K)/(1-rho)
// drives covariance upper bounds and step sizes downstream.
struct LyapunovCertificate {
  Eigen::VectorXd k_diag;
  double rho = 0.0;
  double effective_radius = 0.0;
};

inline LyapunovCertificate make_certificate(Eigen::VectorXd k_diag, double rho) {
  if (k_diag.size() == 0 || !k_diag.allFinite() || k_diag.minCoeff() < 1.0 - 1e-12) {
    throw InvalidInputError("certificate requires k_diag >= 1 entrywise");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw InvalidInputError("certificate requires rho in [0, 1)");
  }
  LyapunovCertificate cert;
  cert.rho = rho;
  cert.effective_radius = k_diag.sum() / (1.0 - rho);
  cert.k_diag = std::move(k_diag);
  return cert;
}

inline double effective_radius(const LyapunovCertificate& cert) {
  return cert.k_diag.sum() / (1.0 - cert.rho);
}

struct CertificateCheck {
  bool ok = false;
  double violation = 0.0;  // lambda_max(Theta^T K Theta - rho K)
};

// Raw overload: K need not be normalized (the condition is homogeneous in K).
inline CertificateCheck check_certificate(const WeightMatrix& theta,
                                          const Eigen::VectorXd& k_diag,
                                          double rho, double tol) {
  require_square_finite(theta);
  if (k_diag.size() != theta.rows() || !k_diag.allFinite() || k_diag.minCoeff() <= 0.0) {
    throw InvalidInputError("check_certificate: k_diag must be positive, matching d");
  }
  if (!(tol >= 0.0)) throw InvalidInputError("check_certificate: tol must be >= 0");

  Eigen::MatrixXd slack = theta.transpose() * k_diag.asDiagonal() * theta;
  slack.diagonal() -= rho * k_diag;
  slack = 0.5 * (slack + slack.transpose()).eval();  // kill symmetry drift
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(slack, Eigen::EigenvaluesOnly);
  const double violation = es.eigenvalues().maxCoeff();
  return CertificateCheck{violation <= tol, violation};
}

// Default verification tolerance: eigenvalue error scales with the matrix
// magnitude, so the tolerance is relative to |Theta|_op^2 * tr(K).
inline double default_check_tolerance(const WeightMatrix& theta,
                                      const Eigen::VectorXd& k_diag) {
  const double op = operator_norm(theta);
  return 1e-8 * op * op * k_diag.sum();
}

inline CertificateCheck check_certificate(const WeightMatrix& theta,
                                          const LyapunovCertificate& cert) {
  return check_certificate(theta, cert.k_diag, cert.rho,
                           default_check_tolerance(theta, cert.k_diag));
}

inline CertificateCheck check_certificate(const WeightMatrix& theta,
                                          const LyapunovCertificate& cert,
                                          double tol) {
  return check_certificate(theta, cert.k_diag, cert.rho, tol);
}

namespace detail {

struct PerronPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

// Power iteration with Rayleigh-quotient convergence for a nonnegative matrix.
// Iterating on a + cI instead of a keeps the eigenvectors but makes the Perron
// eigenvalue strictly dominant in modulus, so cyclic matrices (where the raw
// iteration oscillates forever between eigenvalues of equal modulus) still
// converge; c is subtracted back out of the reported value.
inline PerronPair power_iteration(const Eigen::MatrixXd& a) {
  constexpr int kMaxIters = 10000;
  constexpr double kTol = 1e-12;
  const Eigen::Index d = a.rows();
  const double shift = a.cwiseAbs().rowwise().sum().maxCoeff();
  if (shift == 0.0) {
    return PerronPair{0.0,
                      Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)))};
  }
  Eigen::MatrixXd shifted = a;
  shifted.diagonal().array() += shift;

  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double rayleigh = v.dot(shifted * v);
  for (int it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd w = shifted * v;
    const double norm = w.norm();
    if (norm == 0.0) return PerronPair{-shift, v};
    v = w / norm;
    const double next = v.dot(shifted * v);
    if (std::abs(next - rayleigh) < kTol) {
      return PerronPair{next - shift, v};
    }
    rayleigh = next;
  }
  throw PowerIterationError("power iteration did not converge within 10000 steps");
}

}  // namespace detail

// Certificate search. Two sufficient routes are tried:
//   (a) |Theta|_op < 1: K = I, rho = |Theta|_op^2.
//   (b) spectral radius of the entrywise |Theta| below 1: left/right Perron
//       vectors u, v of |Theta| give K = diag(u_i/v_i), the diagonal scaling
//       that minimizes |K^{1/2} Theta K^{-1/2}|_op over diagonal K, with
//       rho = that norm squared.
// When both succeed the candidate with smaller rho wins; for entrywise
// nonnegative Theta route (b) achieves rho(Theta)^2 exactly. Returning nullopt
// is inconclusive (the routes are sufficient only), not a proof of instability.
inline std::optional<LyapunovCertificate> find_certificate(const WeightMatrix& theta) {
  require_square_finite(theta);
  const int d = static_cast<int>(theta.rows());

  std::optional<LyapunovCertificate> best;

  const double op = operator_norm(theta);
  if (op < 1.0) {
    best = make_certificate(Eigen::VectorXd::Ones(d), op * op);
  }

  // A small positive offset makes the matrix primitive so power iteration has
  // a unique dominant eigenvalue to settle on.
  Eigen::MatrixXd abs_theta =
      theta.cwiseAbs() + Eigen::MatrixXd::Constant(d, d, 1e-12);
  const detail::PerronPair right = detail::power_iteration(abs_theta);
  if (right.value < 1.0) {
    const detail::PerronPair left =
        detail::power_iteration(abs_theta.transpose());
    Eigen::VectorXd k = left.vector.cwiseAbs().cwiseQuotient(right.vector.cwiseAbs());
    k /= k.minCoeff();
    const Eigen::VectorXd k_sqrt = k.cwiseSqrt();
    const Eigen::MatrixXd scaled =
        k_sqrt.asDiagonal() * theta * k_sqrt.cwiseInverse().asDiagonal();
    const double scaled_op = operator_norm(scaled);
    const double rho = scaled_op * scaled_op;
    if (rho < 1.0 && (!best || rho < best->rho)) {
      best = make_certificate(std::move(k), rho);
    }
  }

  return best;
}

// Empirical contraction probe for the noiseless map f(x) = sigma(Theta x).
// Starts are scaled to unit K-norm; the per-step squared-K-norm ratio is the
// reported quantity, and pass means the cumulative decay |f^k(x)|_K^2 <=
// rho^k |x|_K^2 held for every trial and horizon.
struct DecayReport {
  bool pass = true;
  double max_ratio = 0.0;  // largest one-step ratio observed
  int worst_k = 0;
  int worst_trial = -1;
};

inline DecayReport ges_decay_check(const WeightMatrix& theta, const LinkFunction& link,
                                   const LyapunovCertificate& cert, int k_max,
                                   int trials, std::uint64_t seed,
                                   const std::vector<Eigen::VectorXd>& probes = {}) {
  require_square_finite(theta);
  const int d = static_cast<int>(theta.rows());
  if (cert.k_diag.size() != d) throw InvalidInputError("ges_decay_check: dimension mismatch");
  if (k_max < 1 || trials < 0) throw InvalidInputError("ges_decay_check: bad counts");

  const auto k_norm_sq = [&](const Eigen::VectorXd& x) {
    return x.cwiseAbs2().dot(cert.k_diag);
  };

  std::vector<Eigen::VectorXd> starts = probes;
  Rng rng(derive_stream(seed));
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    starts.push_back(x);
  }

  DecayReport report;
  for (std::size_t t = 0; t < starts.size(); ++t) {
    Eigen::VectorXd x = starts[t];
    double norm0 = k_norm_sq(x);
    if (norm0 == 0.0) continue;
    x /= std::sqrt(norm0);
    norm0 = 1.0;

    double prev = norm0;
    double budget = norm0;
    for (int k = 1; k <= k_max; ++k) {
      x = apply_link(link, theta * x);
      const double cur = k_norm_sq(x);
      budget *= cert.rho;
      if (prev > 0.0) {
        const double ratio = cur / prev;
        if (ratio > report.max_ratio) {
          report.max_ratio = ratio;
          report.worst_k = k;
          report.worst_trial = static_cast<int>(t);
        }
      }
      if (cur > budget * (1.0 + 1e-9) + 1e-300) report.pass = false;
      if (cur == 0.0) break;
      prev = cur;
    }
  }
  return report;
}

}  // namespace glds

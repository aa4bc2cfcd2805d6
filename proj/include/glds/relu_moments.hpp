#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>

#include "glds/errors.hpp"
#include "glds/rng.hpp"

namespace glds {

namespace detail {

inline double angle_between(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  // Rounding can push the cosine just past +/-1; clamp before acos.
  const double c = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
  return std::acos(c);
}

inline double relu(double a) { return a > 0.0 ? a : 0.0; }

}  // namespace detail

// E[relu(<u,e>) relu(<v,e>)] for e ~ N(0, I): the closed form
// (1/2pi) |u||v| (sin t + (pi - t) cos t) at the angle t between u and v.
// A zero vector forces the moment to 0 (sigma(0) = 0), returned directly.
inline double arccos_kernel_moment(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size() || u.size() == 0) {
    throw InvalidInputError("arccos_kernel_moment: dimension mismatch");
  }
  if (!u.allFinite() || !v.allFinite()) {
    throw InvalidInputError("arccos_kernel_moment: non-finite input");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double t = detail::angle_between(u, v);
  return nu * nv * (std::sin(t) + (M_PI - t) * std::cos(t)) / (2.0 * M_PI);
}

// E[(relu(<u,e>) - relu(<v,e>))^2] for e ~ N(0, I), expanded through the
// kernel: |u|^2/2 + |v|^2/2 - 2 E[relu(<u,e>) relu(<v,e>)].
inline double relu_gap_second_moment(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return 0.5 * u.squaredNorm() + 0.5 * v.squaredNorm() - 2.0 * arccos_kernel_moment(u, v);
}

struct MomentCheckResult {
  double closed_form = 0.0;
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  std::uint64_t samples = 0;
  bool pass = false;  // |closed_form - mc_estimate| <= 4 mc_stderr (+ rounding floor)
};

namespace detail {

struct McMoments {
  double mean = 0.0;
  double stderr_of_mean = 0.0;
};

// Monte Carlo mean/stderr of fn(<u,x>, <v,x>) with x = shift + scale * z,
// z ~ N(0, I) drawn in full dimension.
template <typename Fn>
McMoments mc_projected_moment(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& shift, double scale,
                              std::uint64_t samples, std::uint64_t seed, Fn&& fn) {
  const Eigen::Index d = u.size();
  const double su0 = shift.size() ? u.dot(shift) : 0.0;
  const double sv0 = shift.size() ? v.dot(shift) : 0.0;
  Rng rng(derive_stream(seed));
  double sum = 0.0;
  double sumsq = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    double au = su0;
    double av = sv0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double z = scale * rng.normal();
      au += u[i] * z;
      av += v[i] * z;
    }
    const double w = fn(au, av);
    sum += w;
    sumsq += w * w;
  }
  const double n = static_cast<double>(samples);
  McMoments out;
  out.mean = sum / n;
  const double var = std::max(0.0, (sumsq / n - out.mean * out.mean) / (n - 1.0));
  out.stderr_of_mean = std::sqrt(var);
  return out;
}

inline MomentCheckResult to_check(double closed_form, const McMoments& mc,
                                  std::uint64_t samples) {
  MomentCheckResult r;
  r.closed_form = closed_form;
  r.mc_estimate = mc.mean;
  r.mc_stderr = mc.stderr_of_mean;
  r.samples = samples;
  // The rounding floor keeps degenerate pairs (identical vectors: the sampled
  // moment is exactly zero with zero spread, the closed form only nearly so)
  // from failing on floating-point residue.
  r.pass = std::abs(closed_form - mc.mean) <=
           4.0 * mc.stderr_of_mean + 1e-12 * std::max(1.0, std::abs(closed_form));
  return r;
}

}  // namespace detail

// Closed form vs Monte Carlo for the kernel moment itself.
inline MomentCheckResult check_arccos_kernel_moment(const Eigen::VectorXd& u,
                                                    const Eigen::VectorXd& v,
                                                    std::uint64_t samples,
                                                    std::uint64_t seed) {
  if (samples < 2) throw InvalidInputError("check_arccos_kernel_moment: samples >= 2");
  const auto mc = detail::mc_projected_moment(
      u, v, Eigen::VectorXd(), 1.0, samples, seed,
      [](double a, double b) { return detail::relu(a) * detail::relu(b); });
  return detail::to_check(arccos_kernel_moment(u, v), mc, samples);
}

struct ReluGapBoundCheck {
  MomentCheckResult moment;  // gamma-scaled gap moment vs Monte Carlo
  double bound = 0.0;        // (gamma/4) |u-v|^2
  bool bound_holds = false;
};

// For e ~ N(0, gamma I): E[(relu(<u,e>) - relu(<v,e>))^2] >= (gamma/4)|u-v|^2.
// The left side equals gamma * relu_gap_second_moment(u, v) by homogeneity;
// both the inequality and the closed form's agreement with sampling are
// checked. Equality is attained at u = -v.
inline ReluGapBoundCheck check_relu_gap_bound(const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& v, double gamma,
                                              std::uint64_t samples = 20000,
                                              std::uint64_t seed = 0x9e3779b9) {
  if (!(gamma > 0.0)) throw InvalidInputError("check_relu_gap_bound: gamma must be > 0");
  if (samples < 2) throw InvalidInputError("check_relu_gap_bound: samples >= 2");

  const double closed = gamma * relu_gap_second_moment(u, v);
  const auto mc = detail::mc_projected_moment(
      u, v, Eigen::VectorXd(), std::sqrt(gamma), samples, seed, [](double a, double b) {
        const double g = detail::relu(a) - detail::relu(b);
        return g * g;
      });

  ReluGapBoundCheck check;
  check.moment = detail::to_check(closed, mc, samples);
  check.bound = 0.25 * gamma * (u - v).squaredNorm();
  check.bound_holds = closed >= check.bound - 1e-12 * std::max(1.0, check.bound);
  return check;
}

struct ShiftedGapCheck {
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  double bound = 0.0;  // (1/4) e^{-|mu|^2} |u-v|^2
  std::uint64_t samples = 0;
  bool bound_holds = false;  // mc_estimate >= bound - 4 mc_stderr
};

// For x ~ N(mu, I): Monte Carlo estimate of E[(relu(<u,x>) - relu(<v,x>))^2]
// checked against the lower bound (1/4) e^{-|mu|^2} |u-v|^2. No closed form is
// available off the mu = 0 axis, so the verdict allows 4 standard errors.
inline ShiftedGapCheck check_shifted_relu_gap(const Eigen::VectorXd& u,
                                              const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& mu,
                                              std::uint64_t samples, std::uint64_t seed) {
  if (u.size() != v.size() || u.size() != mu.size()) {
    throw InvalidInputError("check_shifted_relu_gap: dimension mismatch");
  }
  if (samples < 10000) {
    throw InvalidInputError("check_shifted_relu_gap: needs samples >= 10^4");
  }
  const auto mc = detail::mc_projected_moment(
      u, v, mu, 1.0, samples, seed, [](double a, double b) {
        const double g = detail::relu(a) - detail::relu(b);
        return g * g;
      });

  ShiftedGapCheck check;
  check.mc_estimate = mc.mean;
  check.mc_stderr = mc.stderr_of_mean;
  check.samples = samples;
  check.bound = 0.25 * std::exp(-mu.squaredNorm()) * (u - v).squaredNorm();
  check.bound_holds = mc.mean >= check.bound - 4.0 * mc.stderr_of_mean;
  return check;
}

struct TrigBoundCheck {
  double lhs = 0.0;  // (2t/pi) |u||v| sin^2(t/2)
  double rhs = 0.0;  // (1/4) |u-v|^2
  bool holds = false;
};

// (2t/pi) |u||v| sin^2(t/2) <= (1/4)|u-v|^2, with equality at orthogonal unit
// vectors.
inline TrigBoundCheck check_trig_bound(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size() || u.size() == 0) {
    throw InvalidInputError("check_trig_bound: dimension mismatch");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw InvalidInputError("check_trig_bound: needs nonzero vectors");
  }
  const double t = detail::angle_between(u, v);
  const double s = std::sin(0.5 * t);
  TrigBoundCheck check;
  check.lhs = (2.0 * t / M_PI) * nu * nv * s * s;
  check.rhs = 0.25 * (u - v).squaredNorm();
  check.holds = check.lhs <= check.rhs + 1e-12;
  return check;
}

}  // namespace glds

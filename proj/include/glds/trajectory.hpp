#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "glds/errors.hpp"
#include "glds/link.hpp"
#include "glds/noise.hpp"
#include "glds/rng.hpp"

namespace glds {

using WeightMatrix = Eigen::MatrixXd;

inline void require_square_finite(const WeightMatrix& theta) {
  if (theta.rows() != theta.cols() || theta.rows() == 0) {
    throw InvalidInputError("weight matrix must be square and nonempty");
  }
  if (!theta.allFinite()) {
    throw InvalidInputError("weight matrix has non-finite entries");
  }
}

// States above this norm abort a rollout: the model assumes stability, but
// callers can pass unstable weights.
inline constexpr double kDivergenceNormBound = 1e12;

// One rollout x_0, ..., x_{n+1} with x_0 = 0. Column i of `states` is x_i;
// the n transition pairs used downstream are (x_i, x_{i+1}) for i = 1..n.
struct Trajectory {
  Eigen::MatrixXd states;  // d x (n+2)
  int n = 0;
  int d = 0;
  std::uint64_t seed = 0;

  // Covariates x_1..x_n.
  auto inputs() const { return states.middleCols(1, n); }
  // Targets x_2..x_{n+1}, aligned with inputs().
  auto targets() const { return states.middleCols(2, n); }
};

// Rolls out x_{i+1} = sigma(Theta x_i) + e_i from x_0 = 0. Deterministic for a
// fixed seed; aborts with the failing index if a state blows up.
inline Trajectory simulate(const WeightMatrix& theta, const LinkFunction& link,
                           const NoiseModel& noise, int n, std::uint64_t seed) {
  require_square_finite(theta);
  const int d = static_cast<int>(theta.rows());
  if (noise.d != d) throw InvalidInputError("simulate: noise dimension mismatch");
  if (n < 1) throw InvalidInputError("simulate: need n >= 1");

  Rng rng(derive_stream(seed));
  Trajectory traj;
  traj.n = n;
  traj.d = d;
  traj.seed = seed;
  traj.states.setZero(d, n + 2);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int i = 0; i <= n; ++i) {
    x = apply_link(link, theta * x) + noise.draw(rng);
    if (!x.allFinite() || x.norm() > kDivergenceNormBound) {
      throw DivergenceError("simulate: state diverged", static_cast<std::size_t>(i + 1));
    }
    traj.states.col(i + 1) = x;
  }
  return traj;
}

// k noiseless iterates of x -> sigma(Theta x) starting at x_init (the start
// state itself is not included in the output).
inline std::vector<Eigen::VectorXd> simulate_from(const WeightMatrix& theta,
                                                  const LinkFunction& link,
                                                  const Eigen::VectorXd& x_init,
                                                  int k) {
  require_square_finite(theta);
  if (x_init.size() != theta.rows()) {
    throw InvalidInputError("simulate_from: state dimension mismatch");
  }
  if (!x_init.allFinite()) throw InvalidInputError("simulate_from: non-finite start");
  if (k < 1) throw InvalidInputError("simulate_from: need k >= 1");

  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(k));
  Eigen::VectorXd x = x_init;
  for (int i = 0; i < k; ++i) {
    x = apply_link(link, theta * x);
    if (!x.allFinite() || x.norm() > kDivergenceNormBound) {
      throw DivergenceError("simulate_from: state diverged", static_cast<std::size_t>(i + 1));
    }
    out.push_back(x);
  }
  return out;
}

// Controlled system folded into autonomous form: the block matrix
// [[Theta, B], [0, 0]] over the stacked state [x; u]. The zero rows make the
// link contribute nothing to the control block, so the control coordinates are
// driven purely by the effective noise.
struct AugmentedSystem {
  WeightMatrix theta;  // (d+p) x (d+p)
  int d = 0;
  int p = 0;
};

inline AugmentedSystem augment(const WeightMatrix& theta, const Eigen::MatrixXd& b) {
  require_square_finite(theta);
  if (b.rows() != theta.rows() || b.cols() == 0) {
    throw InvalidInputError("augment: control matrix must be d x p with p >= 1");
  }
  if (!b.allFinite()) throw InvalidInputError("augment: non-finite control matrix");

  const int d = static_cast<int>(theta.rows());
  const int p = static_cast<int>(b.cols());
  AugmentedSystem aug;
  aug.d = d;
  aug.p = p;
  aug.theta.setZero(d + p, d + p);
  aug.theta.topLeftCorner(d, d) = theta;
  aug.theta.topRightCorner(d, p) = b;
  return aug;
}

// Rollout of the augmented autonomous system: state i is [x_i; u_i], and the
// effective noise at step i is [e_i; u_{i+1}], so the first d coordinates
// reproduce x_{i+1} = sigma(Theta x_i + B u_i) + e_i. Needs controls
// u_0..u_{n+1}. The base noise draws d values per step, exactly as simulate
// does, so identical seeds give identical e_i streams. Returns the raw
// (d+p) x (n+2) state matrix; the start state [0; u_0] is generally nonzero.
inline Eigen::MatrixXd simulate_augmented(const AugmentedSystem& aug,
                                          const LinkFunction& link,
                                          const NoiseModel& base_noise,
                                          const std::vector<Eigen::VectorXd>& controls,
                                          int n, std::uint64_t seed) {
  if (base_noise.d != aug.d) {
    throw InvalidInputError("simulate_augmented: base noise dimension mismatch");
  }
  if (n < 1) throw InvalidInputError("simulate_augmented: need n >= 1");
  if (controls.size() < static_cast<std::size_t>(n + 2)) {
    throw InvalidInputError("simulate_augmented: need controls u_0..u_{n+1}");
  }
  for (const auto& u : controls) {
    if (u.size() != aug.p || !u.allFinite()) {
      throw InvalidInputError("simulate_augmented: bad control vector");
    }
  }

  Rng rng(derive_stream(seed));
  const int dp = aug.d + aug.p;
  Eigen::MatrixXd states(dp, n + 2);
  Eigen::VectorXd z(dp);
  z << Eigen::VectorXd::Zero(aug.d), controls[0];
  states.col(0) = z;

  for (int i = 0; i <= n; ++i) {
    Eigen::VectorXd eff(dp);
    eff << base_noise.draw(rng), controls[static_cast<std::size_t>(i + 1)];
    z = apply_link(link, aug.theta * z) + eff;
    if (!z.allFinite() || z.norm() > kDivergenceNormBound) {
      throw DivergenceError("simulate_augmented: state diverged",
                            static_cast<std::size_t>(i + 1));
    }
    states.col(i + 1) = z;
  }
  return states;
}

}  // namespace glds

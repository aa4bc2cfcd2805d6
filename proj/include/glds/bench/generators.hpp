#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "glds/bench/config.hpp"
#include "glds/rng.hpp"
#include "glds/stability.hpp"
#include "glds/trajectory.hpp"

namespace glds::bench {

// Samples a system matrix per the generator descriptor:
//   spectral: iid Gaussian entries rescaled so |Theta|_op = scale;
//   nonneg:   entrywise |Gaussian| rescaled so the spectral radius = scale
//             (exercises the Perron-weighted certificate route);
//   explicit: the literal matrix, ignoring the stream.
inline WeightMatrix make_theta(const ThetaGenSpec& gen, int d, Rng& rng) {
  if (gen.kind == "explicit") {
    const int dim = static_cast<int>(gen.matrix.size());
    WeightMatrix theta(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) theta(i, j) = gen.matrix[i][j];
    require_square_finite(theta);
    return theta;
  }

  WeightMatrix theta(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) theta(i, j) = rng.normal();

  if (gen.kind == "spectral") {
    const double op = operator_norm(theta);
    if (op == 0.0) return WeightMatrix::Zero(d, d);
    return theta * (gen.scale / op);
  }
  if (gen.kind == "nonneg") {
    theta = theta.cwiseAbs();
    const double radius = spectral_radius(theta);
    if (radius == 0.0) return WeightMatrix::Zero(d, d);
    return theta * (gen.scale / radius);
  }
  throw ConfigError("theta_gen.kind must be spectral, nonneg, or explicit");
}

}  // namespace glds::bench

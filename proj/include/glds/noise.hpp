#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "glds/errors.hpp"
#include "glds/rng.hpp"

namespace glds {

// Process-noise distribution: zero-mean, isotropic (E[ee^T] = I at tau = 1),
// scaled by the subgaussian proxy tau. Gaussian is the default; the other two
// kinds exercise the same moments with bounded support.
struct NoiseModel {
  enum class Kind { gaussian, scaled_rademacher, uniform_box };

  Kind kind = Kind::gaussian;
  double tau = 1.0;
  int d = 0;

  static NoiseModel gaussian(int d, double tau = 1.0) {
    return make(Kind::gaussian, d, tau);
  }
  static NoiseModel scaled_rademacher(int d, double tau = 1.0) {
    return make(Kind::scaled_rademacher, d, tau);
  }
  static NoiseModel uniform_box(int d, double tau = 1.0) {
    return make(Kind::uniform_box, d, tau);
  }

  // One d-dimensional draw, coordinates in order (streams stay aligned across
  // wrappers that reuse the base model).
  Eigen::VectorXd draw(Rng& rng) const {
    Eigen::VectorXd e(d);
    switch (kind) {
      case Kind::gaussian:
        for (int i = 0; i < d; ++i) e[i] = tau * rng.normal();
        break;
      case Kind::scaled_rademacher:
        for (int i = 0; i < d; ++i) e[i] = tau * rng.rademacher();
        break;
      case Kind::uniform_box: {
        const double half = std::sqrt(3.0);  // var(U[-sqrt(3), sqrt(3)]) = 1
        for (int i = 0; i < d; ++i) e[i] = tau * rng.uniform(-half, half);
        break;
      }
    }
    return e;
  }

  std::string kind_name() const {
    switch (kind) {
      case Kind::gaussian:
        return "gaussian";
      case Kind::scaled_rademacher:
        return "scaled-rademacher";
      case Kind::uniform_box:
        return "uniform-box";
    }
    return "unknown";
  }

 private:
  static NoiseModel make(Kind kind, int d, double tau) {
    if (d <= 0) throw InvalidInputError("noise dimension must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
      throw InvalidInputError("tau must be finite and nonnegative");
    }
    return NoiseModel{kind, tau, d};
  }
};

}  // namespace glds

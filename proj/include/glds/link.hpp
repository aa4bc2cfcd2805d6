#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "glds/errors.hpp"

namespace glds {

// Coordinatewise nonlinearity sigma: nondecreasing, 1-Lipschitz, sigma(0)=0.
// zeta is the lower derivative bound: |sigma(a)-sigma(b)| >= zeta*|a-b| when
// zeta > 0 (1 for identity, beta for leaky_relu, 0 for relu).
class LinkFunction {
 public:
  enum class Kind { identity, relu, leaky_relu, custom };

  static LinkFunction identity() { return LinkFunction(Kind::identity, 1.0, 1.0); }

  static LinkFunction relu() { return LinkFunction(Kind::relu, 0.0, 0.0); }

  static LinkFunction leaky_relu(double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) {
      throw InvalidInputError("leaky_relu slope must satisfy 0 < beta <= 1");
    }
    return LinkFunction(Kind::leaky_relu, beta, beta);
  }

  // Caller-supplied scalar map with a declared zeta; the property suite
  // validates the declaration by sampling.
  static LinkFunction custom(std::function<double(double)> fn, double zeta) {
    if (!fn) throw InvalidInputError("custom link requires a scalar function");
    if (!(zeta >= 0.0 && zeta <= 1.0)) {
      throw InvalidInputError("zeta must lie in [0, 1]");
    }
    LinkFunction link(Kind::custom, 0.0, zeta);
    link.fn_ = std::move(fn);
    return link;
  }

  Kind kind() const { return kind_; }
  double beta() const { return beta_; }
  double zeta() const { return zeta_; }

  double operator()(double a) const {
    switch (kind_) {
      case Kind::identity:
        return a;
      case Kind::relu:
        return a > 0.0 ? a : 0.0;
      case Kind::leaky_relu:
        return a > 0.0 ? a : beta_ * a;
      case Kind::custom:
        return fn_(a);
    }
    return a;
  }

  std::string kind_name() const {
    switch (kind_) {
      case Kind::identity:
        return "identity";
      case Kind::relu:
        return "relu";
      case Kind::leaky_relu:
        return "leaky_relu";
      case Kind::custom:
        return "custom";
    }
    return "unknown";
  }

 private:
  LinkFunction(Kind kind, double beta, double zeta)
      : kind_(kind), beta_(beta), zeta_(zeta) {}

  Kind kind_;
  double beta_;
  double zeta_;
  std::function<double(double)> fn_;
};

// Coordinatewise application to a vector or a matrix of stacked vectors;
// accepts unevaluated Eigen expressions. Throws on non-finite input.
template <typename Derived>
typename Derived::PlainObject apply_link(const LinkFunction& link,
                                         const Eigen::MatrixBase<Derived>& z) {
  typename Derived::PlainObject out = z.derived();
  if (!out.allFinite()) throw InvalidInputError("apply_link: non-finite input");
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = link(out(i, j));
  return out;
}

}  // namespace glds

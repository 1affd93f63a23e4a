#pragma once

#include <cmath>
#include <stdexcept>

#include "wit/types.hpp"

namespace wit {

enum class PenaltyKind { MCP, SCAD, Lasso };

/// Folded-concave / l1 penalty with level lambda and shape parameter
/// (rho for MCP, a for SCAD; ignored for Lasso).
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::MCP;
  double lambda = 0.0;
  double shape = 2.0;

  void validate() const {
    if (lambda < 0.0) throw ConfigError("penalty: lambda must be >= 0");
    if (kind == PenaltyKind::MCP && !(shape > 1.0))
      throw ConfigError("penalty: MCP requires shape > 1");
    if (kind == PenaltyKind::SCAD && !(shape > 2.0))
      throw ConfigError("penalty: SCAD requires shape > 2");
  }

  PenaltySpec with_lambda(double lam) const {
    PenaltySpec s = *this;
    s.lambda = lam;
    return s;
  }
};

inline PenaltySpec mcp(double lambda, double rho = 2.0) {
  return PenaltySpec{PenaltyKind::MCP, lambda, rho};
}
inline PenaltySpec scad(double lambda, double a = 3.7) {
  return PenaltySpec{PenaltyKind::SCAD, lambda, a};
}
inline PenaltySpec lasso(double lambda) {
  return PenaltySpec{PenaltyKind::Lasso, lambda, 0.0};
}

/// p_lambda(t); even in t, zero at the origin, nondecreasing in |t|.
template <typename Scalar>
Scalar penalty_value(const PenaltySpec& spec, Scalar t) {
  const Scalar at = std::abs(t);
  const Scalar lam = static_cast<Scalar>(spec.lambda);
  switch (spec.kind) {
    case PenaltyKind::Lasso:
      return lam * at;
    case PenaltyKind::MCP: {
      const Scalar rho = static_cast<Scalar>(spec.shape);
      if (at < lam * rho) return lam * at - at * at / (2 * rho);
      return rho * lam * lam / 2;
    }
    case PenaltyKind::SCAD: {
      const Scalar a = static_cast<Scalar>(spec.shape);
      if (at <= lam) return lam * at;
      if (at < a * lam)
        return (2 * a * lam * at - at * at - lam * lam) / (2 * (a - 1));
      return lam * lam * (a + 1) / 2;
    }
  }
  return 0;
}

/// p'_lambda(t) for t >= 0; returns lambda at t=0 (the right limit used in
/// the KKT sub-derivative bound).
template <typename Scalar>
Scalar penalty_derivative(const PenaltySpec& spec, Scalar t) {
  if (t < 0) throw std::domain_error("penalty_derivative: t must be >= 0");
  const Scalar lam = static_cast<Scalar>(spec.lambda);
  switch (spec.kind) {
    case PenaltyKind::Lasso:
      return lam;
    case PenaltyKind::MCP: {
      const Scalar rho = static_cast<Scalar>(spec.shape);
      return std::max<Scalar>(lam - t / rho, 0);
    }
    case PenaltyKind::SCAD: {
      const Scalar a = static_cast<Scalar>(spec.shape);
      if (t <= lam) return lam;
      return std::max<Scalar>(a * lam - t, 0) / (a - 1);
    }
  }
  return 0;
}

/// Component-wise soft threshold sgn(x)(|x|-a)_+.
inline VectorXd soft_threshold(const VectorXd& x, const VectorXd& a) {
  if (x.size() != a.size())
    throw DimensionError("soft_threshold: length mismatch");
  VectorXd out(x.size());
  for (Index j = 0; j < x.size(); ++j) {
    const double m = std::abs(x[j]) - a[j];
    out[j] = m > 0.0 ? (x[j] > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

}  // namespace wit

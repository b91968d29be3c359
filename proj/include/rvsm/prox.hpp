#pragma once

// Penalties and their closed-form thresholding (proximal) operators.
//
// For a unit-weight penalty p and level gamma > 0 every operator here returns
//     argmin_x  gamma * p(x) + (x - w)^2 / 2
// applied componentwise. Inputs exactly on the threshold map to zero.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "rvsm/error.hpp"
#include "rvsm/tensor.hpp"

namespace rvsm {

enum class PenaltyKind { L0, L1, TL1 };

inline std::string_view to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::L0: return "l0";
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::TL1: return "tl1";
  }
  return "?";
}

inline PenaltyKind parse_penalty_kind(std::string_view name) {
  if (name == "l0") return PenaltyKind::L0;
  if (name == "l1") return PenaltyKind::L1;
  if (name == "tl1") return PenaltyKind::TL1;
  throw InvalidParameter("unknown penalty '" + std::string(name) + "' (expected l0, l1 or tl1)");
}

/// Choice of P(u) and its weight lambda. `a` is meaningful only for TL1.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::L0;
  double a = 0.0;
  double lambda = 0.0;

  static PenaltySpec l0(double lambda) { return {PenaltyKind::L0, 0.0, lambda}; }
  static PenaltySpec l1(double lambda) { return {PenaltyKind::L1, 0.0, lambda}; }
  static PenaltySpec tl1(double a, double lambda) { return {PenaltyKind::TL1, a, lambda}; }

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("penalty weight lambda must be finite and >= 0");
    if (kind == PenaltyKind::TL1 && !(a > 0.0 && std::isfinite(a)))
      throw InvalidParameter("TL1 shape parameter a must be finite and > 0");
  }
};

/// Splitting weight beta and the derived thresholding level gamma = lambda / beta.
class ThresholdContext {
 public:
  ThresholdContext(double lambda, double beta) : lambda_(lambda), beta_(beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be finite and > 0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("lambda must be finite and >= 0");
  }

  double lambda() const noexcept { return lambda_; }
  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return lambda_ / beta_; }

 private:
  double lambda_;
  double beta_;
};

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidParameter(std::string(name) + " must be finite and > 0");
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite input");
}

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

/// Transformed-l1 penalty (a+1)|x| / (a+|x|).
inline double rho_a(double a, double x) {
  detail::require_positive(a, "TL1 parameter a");
  const double ax = std::abs(x);
  return (a + 1.0) * ax / (a + ax);
}

/// p(x) with unit weight: 1{x != 0}, |x| or rho_a(x).
inline double unit_penalty(const PenaltySpec& spec, double x) {
  switch (spec.kind) {
    case PenaltyKind::L0: return x != 0.0 ? 1.0 : 0.0;
    case PenaltyKind::L1: return std::abs(x);
    case PenaltyKind::TL1: return rho_a(spec.a, x);
  }
  return 0.0;
}

/// lambda * P(v).
inline double penalty_value(const PenaltySpec& spec, const Tensor& v) {
  spec.validate();
  double sum = 0.0;
  for (double x : v) {
    detail::require_finite(x, "penalty_value");
    sum += unit_penalty(spec, x);
  }
  return spec.lambda * sum;
}

/// d/dx of the unit penalty for direct penalized SGD; 0 at x = 0.
inline double penalty_derivative(const PenaltySpec& spec, double x) {
  switch (spec.kind) {
    case PenaltyKind::L0:
      throw UnsupportedPenalty("l0 has zero gradient almost everywhere; use RVSM instead");
    case PenaltyKind::L1: return detail::sign(x);
    case PenaltyKind::TL1: {
      const double d = spec.a + std::abs(x);
      return spec.a * (spec.a + 1.0) * detail::sign(x) / (d * d);
    }
  }
  return 0.0;
}

inline double hard_threshold(double gamma, double w) {
  detail::require_positive(gamma, "gamma");
  detail::require_finite(w, "hard_threshold");
  return std::abs(w) <= std::sqrt(2.0 * gamma) ? 0.0 : w;
}

inline double soft_threshold(double gamma, double w) {
  detail::require_positive(gamma, "gamma");
  detail::require_finite(w, "soft_threshold");
  if (w >= gamma) return w - gamma;
  if (w <= -gamma) return w + gamma;
  return 0.0;
}

/// Level t below which the TL1 operator returns 0.
inline double tl1_threshold_level(double a, double gamma) {
  detail::require_positive(a, "TL1 parameter a");
  detail::require_positive(gamma, "gamma");
  if (gamma <= a * a / (2.0 * (a + 1.0))) return gamma * (a + 1.0) / a;
  return std::sqrt(2.0 * gamma * (a + 1.0)) - a / 2.0;
}

namespace detail {

/// Closed-form TL1 branch for |w| > t.
///
/// With e = 27 gamma a (a+1) / (2 (a+|w|)^3) the textbook form is
///   |g| = 2/3 (a+|w|) cos(phi/3) - 2a/3 + |w|/3,  phi = arccos(1 - e).
/// It is evaluated as |w| - 4/3 (a+|w|) sin^2(phi/6) with phi = 2 asin(sqrt(e/2)),
/// which is the same quantity without the cancellation that ruins it for large a.
inline double tl1_branch(double a, double gamma, double w) {
  const double aw = std::abs(w);
  const double d = a + aw;
  double e = 27.0 * gamma * a * (a + 1.0) / (2.0 * d * d * d);
  if (e > 2.0) {
    if (e - 2.0 > 1e-12)
      throw NumericalDomainError("TL1 arccos argument " + std::to_string(1.0 - e) +
                                 " outside [-1, 1]");
    e = 2.0;
  }
  const double phi = 2.0 * std::asin(std::sqrt(e / 2.0));
  const double s = std::sin(phi / 6.0);
  return sign(w) * (aw - 4.0 / 3.0 * d * s * s);
}

}  // namespace detail

inline double tl1_threshold(double a, double gamma, double w) {
  detail::require_finite(w, "tl1_threshold");
  const double t = tl1_threshold_level(a, gamma);
  if (std::abs(w) <= t) return 0.0;
  return detail::tl1_branch(a, gamma, w);
}

/// Unit-weight threshold operator of `spec` at level gamma (its lambda is ignored).
inline double threshold(const PenaltySpec& spec, double gamma, double w) {
  switch (spec.kind) {
    case PenaltyKind::L0: return hard_threshold(gamma, w);
    case PenaltyKind::L1: return soft_threshold(gamma, w);
    case PenaltyKind::TL1: return tl1_threshold(spec.a, gamma, w);
  }
  return w;
}

/// Elementwise threshold of a whole tensor; gamma == 0 is the identity map.
inline Tensor threshold(const PenaltySpec& spec, double gamma, const Tensor& w) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be >= 0");
  Tensor out = w;
  if (gamma == 0.0) {
    if (!w.all_finite()) throw InvalidInput("threshold: non-finite input");
    return out;
  }
  switch (spec.kind) {
    case PenaltyKind::L0: {
      const double level = std::sqrt(2.0 * gamma);
      for (double& x : out) {
        detail::require_finite(x, "threshold");
        if (std::abs(x) <= level) x = 0.0;
      }
      break;
    }
    case PenaltyKind::L1:
      for (double& x : out) x = soft_threshold(gamma, x);
      break;
    case PenaltyKind::TL1: {
      const double t = tl1_threshold_level(spec.a, gamma);
      for (double& x : out) {
        detail::require_finite(x, "threshold");
        x = std::abs(x) <= t ? 0.0 : detail::tl1_branch(spec.a, gamma, x);
      }
      break;
    }
  }
  return out;
}

/// Brute-force prox: minimizes gamma*p(x) + (x-w)^2/2 over the grid
/// {lo, lo+step, ..., hi} plus the point 0. Ties go to the smaller |x|.
inline double prox_oracle(const PenaltySpec& spec, double gamma, double w, double lo, double hi,
                          double step) {
  if (!(step > 0.0) || !(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw InvalidParameter("prox_oracle: empty grid");
  if (!(lo < w && w < hi)) throw InvalidParameter("prox_oracle: w must lie strictly inside (lo, hi)");
  if (spec.kind == PenaltyKind::TL1) detail::require_positive(spec.a, "TL1 parameter a");

  auto objective = [&](double x) { return gamma * unit_penalty(spec, x) + 0.5 * (x - w) * (x - w); };

  double best_x = 0.0;
  double best = objective(0.0);
  const auto count = static_cast<std::int64_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::int64_t k = 0; k <= count; ++k) {
    const double x = lo + static_cast<double>(k) * step;
    const double f = objective(x);
    if (f < best || (f == best && std::abs(x) < std::abs(best_x))) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace rvsm

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace plcrit {

/// One term c * tau^e of a bracket function.
struct PowerTerm {
  double coefficient = 0.0;
  double exponent = 0.0;
};

/// Finite sum of real-exponent power terms on tau in (0, inf). Terms with
/// equal exponents are merged on construction and zero coefficients dropped;
/// terms are kept sorted by exponent.
class BracketFunction {
 public:
  BracketFunction() = default;

  explicit BracketFunction(std::vector<PowerTerm> terms) {
    std::sort(terms.begin(), terms.end(),
              [](const PowerTerm& a, const PowerTerm& b) { return a.exponent < b.exponent; });
    for (const auto& t : terms) {
      if (!std::isfinite(t.coefficient) || !std::isfinite(t.exponent))
        throw std::invalid_argument("BracketFunction: non-finite term");
      if (!terms_.empty() && terms_.back().exponent == t.exponent)
        terms_.back().coefficient += t.coefficient;
      else
        terms_.push_back(t);
    }
    terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                [](const PowerTerm& t) { return t.coefficient == 0.0; }),
                 terms_.end());
  }

  const std::vector<PowerTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double operator()(double tau) const {
    if (!(tau > 0.0)) throw std::invalid_argument("BracketFunction: tau must be positive");
    const double lt = std::log(tau);
    double v = 0.0;
    for (const auto& t : terms_)
      v += (t.exponent == 0.0) ? t.coefficient : t.coefficient * std::exp(t.exponent * lt);
    return v;
  }

  /// Limit as tau -> 0+: decided by the smallest exponent present.
  double limit_at_zero() const {
    if (terms_.empty()) return 0.0;
    const PowerTerm& t = terms_.front();
    if (t.exponent < 0.0)
      return t.coefficient > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
    if (t.exponent == 0.0) return t.coefficient;
    return 0.0;
  }

  /// Limit as tau -> +inf: decided by the largest exponent present.
  double limit_at_infinity() const {
    if (terms_.empty()) return 0.0;
    const PowerTerm& t = terms_.back();
    if (t.exponent > 0.0)
      return t.coefficient > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
    if (t.exponent == 0.0) return t.coefficient;
    return 0.0;
  }

 private:
  std::vector<PowerTerm> terms_;
};

/// Result of a supremum search: the maximizer and the attained value.
struct SupResult {
  double tau_star = 0.0;
  double value = 0.0;
};

namespace detail {

template <class F>
SupResult golden_section_max(const F& f, double a, double b, double abs_tol) {
  static const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  SupResult best{fc >= fd ? c : d, std::max(fc, fd)};
  const double eps = std::numeric_limits<double>::epsilon();
  while (b - a > std::max(abs_tol, 4.0 * eps * (std::abs(a) + std::abs(b)))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    if (fc > best.value) best = {c, fc};
    if (fd > best.value) best = {d, fd};
  }
  const double mid = 0.5 * (a + b);
  const double fm = f(mid);
  if (fm > best.value) best = {mid, fm};
  return best;
}

}  // namespace detail

/// Supremum of a bracket function over tau in (0, inf).
///
/// Strategy: classify the end behaviour first (an end limit of +inf means the
/// supremum is infinite and the call is rejected); then a log-uniform coarse
/// scan, widened geometrically while the maximum sits on an edge, localizes
/// the global maximum, and golden-section iteration refines the bracketing
/// interval to absolute width `abs_tol`. If a finite end limit exceeds every
/// interior value the supremum is not attained and the call is rejected.
inline SupResult sup_tau(const BracketFunction& f, double abs_tol = 1e-12) {
  if (f.empty()) throw std::invalid_argument("sup_tau: bracket function has no terms");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("sup_tau: tolerance must be positive");

  const double lim0 = f.limit_at_zero();
  const double liminf = f.limit_at_infinity();
  if (lim0 == std::numeric_limits<double>::infinity() ||
      liminf == std::numeric_limits<double>::infinity())
    throw std::invalid_argument("sup_tau: supremum is infinite");

  constexpr int kCoarse = 256;
  double lo = 1e-6, hi = 1e6;
  constexpr double kLoCap = 1e-18, kHiCap = 1e18;

  std::vector<double> grid(kCoarse), vals(kCoarse);
  int argmax = 0;
  for (int pass = 0; pass < 16; ++pass) {
    const double llo = std::log(lo), lhi = std::log(hi);
    argmax = 0;
    for (int i = 0; i < kCoarse; ++i) {
      grid[i] = std::exp(llo + (lhi - llo) * i / (kCoarse - 1));
      vals[i] = f(grid[i]);
      if (vals[i] > vals[argmax]) argmax = i;
    }
    const bool at_lo = (argmax == 0 && lo > kLoCap);
    const bool at_hi = (argmax == kCoarse - 1 && hi < kHiCap);
    if (!at_lo && !at_hi) break;
    if (at_lo) lo = std::max(kLoCap, lo * 1e-4);
    if (at_hi) hi = std::min(kHiCap, hi * 1e4);
  }

  // A maximizing sequence still pinned to an edge after the widening passes
  // means the supremum is approached toward a boundary, not attained inside.
  if (argmax == 0 || argmax == kCoarse - 1)
    throw std::invalid_argument("sup_tau: supremum approached only at the boundary, not attained");

  SupResult best = detail::golden_section_max(f, grid[argmax - 1], grid[argmax + 1], abs_tol);
  if (vals[argmax] > best.value) best = {grid[argmax], vals[argmax]};

  const double boundary = std::max(lim0, liminf);
  if (boundary > best.value + std::max(abs_tol, abs_tol * std::abs(best.value)))
    throw std::invalid_argument("sup_tau: supremum approached only at the boundary, not attained");
  return best;
}

}  // namespace plcrit

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "plcrit/bracket.hpp"
#include "plcrit/params.hpp"
#include "plcrit/sobolev.hpp"

namespace plcrit {

/// Outcome of one threshold evaluation. `threshold` may be <= 0; then every
/// positive lambda clears the bound and `all_lambda_admissible` is set
/// instead of clamping.
struct ThresholdResult {
  int m = 1;
  double lambda_m = 0.0;
  double tau_star = 0.0;
  double sup_value = 0.0;
  double threshold = 0.0;
  bool all_lambda_admissible = false;
};

/// Bracket of the non-resonant bound (r > p):
///   lambda_m/(p tau^{r-p}) + (alpha/q) lambda_m^{q/p} tau^{-(r-q)}
///   - cstar/tau^r - (gamma/p*) tau^{p*-r}.
inline BracketFunction bracket_general(const HypothesisConstants& h, double lambda_m) {
  h.validate();
  if (!(h.r > h.p)) throw std::invalid_argument("bracket_general: requires r > p");
  if (!(lambda_m > 0.0)) throw std::invalid_argument("bracket_general: lambda_m must be positive");
  std::vector<PowerTerm> terms;
  terms.push_back({lambda_m / h.p, -(h.r - h.p)});
  if (h.alpha > 0.0)
    terms.push_back({(h.alpha / h.q) * std::pow(lambda_m, h.q / h.p), -(h.r - h.q)});
  terms.push_back({-h.cstar, -h.r});
  terms.push_back({-h.gamma / h.p_star, h.p_star - h.r});
  return BracketFunction(std::move(terms));
}

/// Bracket of the resonant bound (r = p):
///   (alpha/q) lambda_m^{q/p} tau^{-(p-q)} - cstar/tau^p - (gamma/p*) tau^{p*-p}.
inline BracketFunction bracket_resonant(const HypothesisConstants& h, double lambda_m) {
  h.validate();
  if (h.r != h.p) throw std::invalid_argument("bracket_resonant: requires r = p");
  if (!(lambda_m > 0.0)) throw std::invalid_argument("bracket_resonant: lambda_m must be positive");
  std::vector<PowerTerm> terms;
  if (h.alpha > 0.0)
    terms.push_back({(h.alpha / h.q) * std::pow(lambda_m, h.q / h.p), -(h.p - h.q)});
  terms.push_back({-h.cstar, -h.p});
  terms.push_back({-h.gamma / h.p_star, h.p_star - h.p});
  return BracketFunction(std::move(terms));
}

/// Lower bound nu_m = (r/beta) sup_tau of the non-resonant bracket.
inline ThresholdResult nu_general(const HypothesisConstants& h, double lambda_m, int m = 1,
                                  double tol = 1e-12) {
  const BracketFunction f = bracket_general(h, lambda_m);
  const SupResult s = sup_tau(f, tol);
  ThresholdResult out;
  out.m = m;
  out.lambda_m = lambda_m;
  out.tau_star = s.tau_star;
  out.sup_value = s.value;
  out.threshold = (h.r / h.beta) * s.value;
  out.all_lambda_admissible = (out.threshold <= 0.0);
  return out;
}

/// Lower bound lambda_m + p sup_tau of the resonant bracket.
inline ThresholdResult nu_resonant(const HypothesisConstants& h, double lambda_m, int m = 1,
                                   double tol = 1e-12) {
  const BracketFunction f = bracket_resonant(h, lambda_m);
  const SupResult s = sup_tau(f, tol);
  ThresholdResult out;
  out.m = m;
  out.lambda_m = lambda_m;
  out.tau_star = s.tau_star;
  out.sup_value = s.value;
  out.threshold = lambda_m + h.p * s.value;
  out.all_lambda_admissible = (out.threshold <= 0.0);
  return out;
}

namespace detail {

/// Hypothesis constants realized by the volume-based Holder bounds on a
/// domain of measure `volume`: alpha = |O|^{1-q/p} (or 0 without a q-term),
/// beta = |O|^{1-r/p}, gamma = |O|^{-p/(N-p)}, cstar = S^{N/p}/N.
inline HypothesisConstants domain_constants(const ProblemParams& params, bool with_q) {
  HypothesisConstants h;
  h.p = params.p;
  h.q = with_q ? *params.q : 0.5 * (1.0 + params.p);
  h.r = params.r;
  h.p_star = params.p_star();
  h.alpha0 = 0.0;
  h.alpha = with_q ? std::pow(params.volume, 1.0 - h.q / h.p) : 0.0;
  h.beta = std::pow(params.volume, 1.0 - h.r / h.p);
  h.gamma = std::pow(params.volume, -h.p / (params.dimension - h.p));
  h.cstar = ps_ceiling(params.dimension, h.p);
  return h;
}

}  // namespace detail

/// Multiplicity threshold for the pure p-power model, p < r < p*:
///   r |O|^{r/p-1} sup_tau [ lambda_m/(p tau^{r-p}) - cstar/tau^r
///                           - tau^{p*-r}/(p* |O|^{p/(N-p)}) ].
inline ThresholdResult threshold_p(int m, double lambda_m, const ProblemParams& params,
                                   double tol = 1e-12) {
  params.validate();
  if (m < 1) throw std::invalid_argument("threshold_p: m must be >= 1");
  if (params.has_q()) throw std::invalid_argument("threshold_p: params must not carry q");
  if (!(params.r > params.p))
    throw std::invalid_argument("threshold_p: requires r > p (resonant case not covered)");
  return nu_general(detail::domain_constants(params, false), lambda_m, m, tol);
}

/// Multiplicity threshold for the two-power model. For p < r < p* the bracket
/// gains the term |O|^{1-q/p} lambda_m^{q/p} / (q tau^{r-q}); for r = p the
/// bound is the resonant one, admissible only when p <= q*.
inline ThresholdResult threshold_pq(int m, double lambda_m, const ProblemParams& params,
                                    double tol = 1e-12) {
  params.validate();
  if (m < 1) throw std::invalid_argument("threshold_pq: m must be >= 1");
  if (!params.has_q()) throw std::invalid_argument("threshold_pq: params must carry q");
  if (params.r > params.p) return nu_general(detail::domain_constants(params, true), lambda_m, m, tol);
  const double q_star = critical_exponent(params.dimension, *params.q);
  if (!(params.p <= q_star))
    throw std::invalid_argument("threshold_pq: resonant case requires p <= q*");
  return nu_resonant(detail::domain_constants(params, true), lambda_m, m, tol);
}

/// Upper envelope of the restricted energy along the scaling tau, one value
/// per grid point:
///   tau^p lambda_m/p + (alpha tau^q/q) lambda_m^{q/p}
///   - lambda beta tau^r/r - (gamma/p*) tau^{p*}        (r > p)
///   tau^p (lambda_m - lambda)/p + (alpha tau^q/q) lambda_m^{q/p}
///   - (gamma/p*) tau^{p*}                              (r = p)
inline std::vector<double> envelope_upper(const HypothesisConstants& h, double lambda_m,
                                          double lambda, const std::vector<double>& tau_grid) {
  h.validate();
  if (!(lambda_m > 0.0)) throw std::invalid_argument("envelope_upper: lambda_m must be positive");
  if (!(lambda >= 0.0)) throw std::invalid_argument("envelope_upper: lambda must be nonnegative");
  const double mass_coeff = (h.alpha / h.q) * std::pow(lambda_m, h.q / h.p);
  std::vector<double> out;
  out.reserve(tau_grid.size());
  for (double tau : tau_grid) {
    if (!(tau > 0.0)) throw std::invalid_argument("envelope_upper: grid values must be positive");
    double v;
    if (h.r == h.p) {
      v = std::pow(tau, h.p) * (lambda_m - lambda) / h.p + mass_coeff * std::pow(tau, h.q) -
          (h.gamma / h.p_star) * std::pow(tau, h.p_star);
    } else {
      v = std::pow(tau, h.p) * lambda_m / h.p + mass_coeff * std::pow(tau, h.q) -
          lambda * h.beta * std::pow(tau, h.r) / h.r -
          (h.gamma / h.p_star) * std::pow(tau, h.p_star);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace plcrit

#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

namespace plcrit {

/// Which variational model a parameter set describes: the single-exponent
/// problem, or the two-exponent problem with the extra q-gradient term.
enum class Model { p_only, pq };

/// Critical Sobolev exponent Np/(N-p). Defined only for 1 < p < N.
inline double critical_exponent(int dimension, double p) {
  if (dimension < 2) throw std::invalid_argument("critical_exponent: dimension must be >= 2");
  if (!(p > 1.0) || !(p < static_cast<double>(dimension)))
    throw std::invalid_argument("critical_exponent: requires 1 < p < N");
  return static_cast<double>(dimension) * p / (static_cast<double>(dimension) - p);
}

/// Inputs common to every formula: dimension, exponents, domain volume and
/// the parameter lambda (optional until a solve is requested).
struct ProblemParams {
  int dimension = 0;               ///< spatial dimension N
  double p = 0.0;                  ///< primary exponent, 1 < p < N
  std::optional<double> q;         ///< secondary exponent, 1 < q < p (pq model only)
  double r = 0.0;                  ///< subcritical exponent, p <= r < p*
  double volume = 0.0;             ///< |Omega| > 0
  std::optional<double> lambda;    ///< problem parameter, >= 0 when present (0 is the
                                   ///< diagnostic limit used by the audits and scans)

  double p_star() const { return critical_exponent(dimension, p); }
  bool has_q() const { return q.has_value(); }
  Model model() const { return q ? Model::pq : Model::p_only; }

  void validate() const {
    const double ps = p_star();  // also checks 1 < p < N, N >= 2
    if (q) {
      if (!(*q > 1.0) || !(*q < p)) throw std::invalid_argument("ProblemParams: requires 1 < q < p");
    }
    if (!(r >= p) || !(r < ps)) throw std::invalid_argument("ProblemParams: requires p <= r < p*");
    if (!(volume > 0.0)) throw std::invalid_argument("ProblemParams: volume must be positive");
    if (lambda && !(*lambda >= 0.0))
      throw std::invalid_argument("ProblemParams: lambda must be nonnegative");
  }
};

/// The constants of the abstract growth hypotheses. alpha0/alpha may be zero
/// (the specialization with no q-gradient term); beta, gamma, cstar must be
/// positive.
struct HypothesisConstants {
  double alpha0 = 0.0;  ///< lower F-growth constant (resonant model's origin diagnostic only)
  double alpha = 0.0;   ///< upper F-growth constant
  double beta = 0.0;    ///< lower G-growth constant
  double gamma = 0.0;   ///< lower H-growth constant
  double cstar = 0.0;   ///< compactness ceiling
  double q = 0.0;
  double p = 0.0;
  double r = 0.0;
  double p_star = 0.0;

  void validate() const {
    if (!(alpha0 >= 0.0) || !(alpha >= 0.0))
      throw std::invalid_argument("HypothesisConstants: alpha0, alpha must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("HypothesisConstants: beta must be positive");
    if (!(gamma > 0.0)) throw std::invalid_argument("HypothesisConstants: gamma must be positive");
    if (!(cstar > 0.0)) throw std::invalid_argument("HypothesisConstants: cstar must be positive");
    if (!(q > 1.0) || !(q < p)) throw std::invalid_argument("HypothesisConstants: requires 1 < q < p");
    if (!(r >= p)) throw std::invalid_argument("HypothesisConstants: requires r >= p");
    if (!(r <= p_star)) throw std::invalid_argument("HypothesisConstants: requires r <= p*");
    if (!(p_star > p)) throw std::invalid_argument("HypothesisConstants: requires p < p*");
  }
};

}  // namespace plcrit

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "plcrit/quadrature.hpp"

using plcrit::QuadratureRule;
using plcrit::simplex_rule;

namespace {

double factorial(int n) {
  double out = 1.0;
  for (int k = 2; k <= n; ++k) out *= k;
  return out;
}

// Reference-simplex monomial integral: prod(alpha_i!) / (|alpha| + N)!.
double monomial_integral(const std::vector<int>& alpha) {
  const int dim = static_cast<int>(alpha.size());
  int total = 0;
  double numer = 1.0;
  for (int a : alpha) {
    total += a;
    numer *= factorial(a);
  }
  return numer / factorial(total + dim);
}

double quadrature_monomial(const QuadratureRule& rule, const std::vector<int>& alpha) {
  double acc = 0.0;
  for (int q = 0; q < rule.size(); ++q) {
    const double* bary = rule.point(q);
    double term = rule.weights[q];
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      // Cartesian coordinate i of the reference simplex is barycentric i+1.
      for (int k = 0; k < alpha[i]; ++k) term *= bary[i + 1];
    }
    acc += term;
  }
  return acc;
}

void check_all_monomials(const QuadratureRule& rule) {
  std::vector<int> alpha(rule.dimension, 0);
  // Odometer over all multi-indices with total degree <= rule.degree.
  while (true) {
    int total = 0;
    for (int a : alpha) total += a;
    if (total <= rule.degree) {
      const double exact = monomial_integral(alpha);
      const double approx = quadrature_monomial(rule, alpha);
      INFO("dimension " << rule.dimension << " degree " << total);
      CHECK(approx == Catch::Approx(exact).epsilon(1e-12));
    }
    int k = 0;
    while (k < rule.dimension) {
      if (++alpha[k] <= rule.degree) break;
      alpha[k] = 0;
      ++k;
    }
    if (k == rule.dimension) break;
  }
}

}  // namespace

TEST_CASE("simplex rules integrate constants to the reference volume") {
  for (int dim : {2, 3, 4}) {
    const QuadratureRule rule = simplex_rule(dim);
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    CHECK(sum == Catch::Approx(1.0 / factorial(dim)).epsilon(1e-14));
  }
}

TEST_CASE("simplex rule points are interior with positive weights") {
  for (int dim : {2, 3, 4}) {
    const QuadratureRule rule = simplex_rule(dim);
    REQUIRE(rule.degree >= 4);
    for (int q = 0; q < rule.size(); ++q) {
      CHECK(rule.weights[q] > 0.0);
      const double* bary = rule.point(q);
      double sum = 0.0;
      for (int j = 0; j <= dim; ++j) {
        CHECK(bary[j] >= 0.0);
        CHECK(bary[j] <= 1.0);
        sum += bary[j];
      }
      CHECK(sum == Catch::Approx(1.0).epsilon(1e-13));
    }
  }
}

TEST_CASE("simplex rules are exact for all monomials up to their degree") {
  for (int dim : {2, 3, 4}) check_all_monomials(simplex_rule(dim));
}

TEST_CASE("simplex rule rejects unsupported dimensions") {
  CHECK_THROWS(simplex_rule(1));
  CHECK_THROWS(simplex_rule(5));
}

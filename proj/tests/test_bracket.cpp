#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

#include "plcrit/bracket.hpp"
#include "test_util.hpp"

using namespace plcrit;
using plcrit_test::log_grid_max;

TEST_CASE("bracket function merges equal exponents and drops zeros", "[bracket]") {
  BracketFunction f({{1.0, 2.0}, {2.0, 2.0}, {0.0, 1.0}, {-1.0, -1.0}});
  REQUIRE(f.terms().size() == 2);
  CHECK(f.terms()[0].exponent == -1.0);
  CHECK(f.terms()[1].coefficient == 3.0);
  CHECK(f(2.0) == Catch::Approx(3.0 * 4.0 - 0.5).margin(1e-14));
}

TEST_CASE("bracket function end limits", "[bracket]") {
  BracketFunction f({{-1.0, -1.0}, {-1.0, 1.0}});
  CHECK(f.limit_at_zero() == -std::numeric_limits<double>::infinity());
  CHECK(f.limit_at_infinity() == -std::numeric_limits<double>::infinity());

  BracketFunction g({{1.0, -1.0}, {-1.0, -2.0}});
  CHECK(g.limit_at_zero() == -std::numeric_limits<double>::infinity());
  CHECK(g.limit_at_infinity() == 0.0);

  BracketFunction c({{3.0, 0.0}, {-1.0, 1.0}});
  CHECK(c.limit_at_zero() == 3.0);
}

TEST_CASE("sup of -1/tau - tau is -2 at tau = 1", "[bracket]") {
  BracketFunction f({{-1.0, -1.0}, {-1.0, 1.0}});
  const SupResult s = sup_tau(f, 1e-12);
  CHECK(s.tau_star == Catch::Approx(1.0).margin(1e-9));
  CHECK(s.value == Catch::Approx(-2.0).margin(1e-12));
}

TEST_CASE("sup of 1/tau - 1/tau^2 is 1/4 at tau = 2", "[bracket]") {
  BracketFunction f({{1.0, -1.0}, {-1.0, -2.0}});
  const SupResult s = sup_tau(f, 1e-12);
  CHECK(s.tau_star == Catch::Approx(2.0).margin(1e-8));
  CHECK(s.value == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("three-term bracket matches exhaustive grid search", "[bracket][oracle]") {
  // 1/(2 tau) - 1/(4 tau^3) - tau/4: stationary at tau = 1 with value 0.
  BracketFunction f({{0.5, -1.0}, {-0.25, -3.0}, {-0.25, 1.0}});
  const SupResult s = sup_tau(f, 1e-12);
  const auto [gt, gv] = log_grid_max(f, 1e-6, 1e6, 1'000'000);
  CHECK(s.value >= gv - 1e-12);
  CHECK(std::abs(s.value - gv) <= 1e-6 * std::max({1.0, std::abs(s.value), std::abs(gv)}));
  CHECK(s.tau_star == Catch::Approx(1.0).margin(1e-6));
  CHECK(std::abs(s.value) < 1e-12);
  (void)gt;
}

TEST_CASE("sup rejects functions unbounded above or boundary-dominant", "[bracket]") {
  CHECK_THROWS_AS(sup_tau(BracketFunction({{1.0, 1.0}}), 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(sup_tau(BracketFunction({{1.0, -1.0}, {1.0, 1.0}}), 1e-12),
                  std::invalid_argument);
  // -1/tau tends to 0 from below at infinity; the supremum 0 is not attained.
  CHECK_THROWS_AS(sup_tau(BracketFunction({{-1.0, -1.0}}), 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(sup_tau(BracketFunction(std::vector<PowerTerm>{}), 1e-12),
                  std::invalid_argument);
}

TEST_CASE("sup dominates a fine audit grid on randomized brackets", "[bracket][oracle]") {
  std::mt19937 rng(20240817u);
  std::uniform_real_distribution<double> expo(0.2, 5.0);
  std::uniform_real_distribution<double> coef(0.1, 10.0);
  std::uniform_int_distribution<int> extra(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PowerTerm> terms;
    terms.push_back({-coef(rng), -expo(rng)});  // most negative exponent, negative coefficient
    terms.push_back({coef(rng), expo(rng)});    // placeholder sign fixed below
    const int mid = extra(rng);
    for (int j = 0; j < mid; ++j) {
      const double e = std::uniform_real_distribution<double>(terms.front().exponent * 0.9,
                                                              terms.back().exponent * 0.9)(rng);
      terms.push_back({(coin(rng) ? 1.0 : -1.0) * coef(rng), e});
    }
    // Force the largest exponent present to carry a negative coefficient.
    std::size_t top = 0;
    for (std::size_t j = 1; j < terms.size(); ++j)
      if (terms[j].exponent > terms[top].exponent) top = j;
    terms[top].coefficient = -std::abs(terms[top].coefficient);

    BracketFunction f(terms);
    const SupResult s = sup_tau(f, 1e-12);
    const auto [gt, gv] = log_grid_max(f, 1e-6, 1e6, 1'000'000);
    INFO("trial " << trial << " tau* " << s.tau_star << " sup " << s.value << " grid " << gv);
    CHECK(s.value >= gv - 1e-12);
    CHECK(std::abs(s.value - gv) <= 1e-4 * std::max(1.0, std::abs(s.value)));
    (void)gt;
  }
}

TEST_CASE("sup is deterministic", "[bracket]") {
  BracketFunction f({{0.5, -1.0}, {-0.25, -3.0}, {-0.25, 1.0}});
  const SupResult a = sup_tau(f, 1e-12);
  const SupResult b = sup_tau(f, 1e-12);
  CHECK(a.tau_star == b.tau_star);
  CHECK(a.value == b.value);
}

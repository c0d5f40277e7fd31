#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"
#include "test_util.hpp"

using namespace plcrit;
using plcrit_test::log_grid_max;

namespace {

ProblemParams base_params() {
  ProblemParams params;
  params.dimension = 4;
  params.p = 2.0;
  params.r = 3.0;
  params.volume = 1.0;
  return params;
}

HypothesisConstants generic_constants() {
  HypothesisConstants h;
  h.alpha0 = 0.0;
  h.alpha = 1.0;
  h.beta = 1.0;
  h.gamma = 1.0;
  h.cstar = 1.0;
  h.q = 1.5;
  h.p = 2.0;
  h.r = 3.0;
  h.p_star = 4.0;
  return h;
}

}  // namespace

TEST_CASE("unit Sobolev-constant seam reproduces the three-term bracket", "[thresholds]") {
  HypothesisConstants h = generic_constants();
  h.alpha = 0.0;
  h.cstar = ps_ceiling_from(1.0, 4, 2.0);  // = 1/4
  // Bracket becomes 1/(2 tau) - 1/(4 tau^3) - tau/4 with sup 0 at tau = 1;
  // the computed supremum carries rounding noise of a few ulp around zero.
  const ThresholdResult res = nu_general(h, 1.0);
  CHECK(res.tau_star == Catch::Approx(1.0).margin(1e-6));
  CHECK(std::abs(res.sup_value) < 1e-12);
  CHECK(std::abs(res.threshold) < 1e-11);
  CHECK(res.all_lambda_admissible == (res.threshold <= 0.0));
}

TEST_CASE("negative threshold reported raw with admissibility flag", "[thresholds]") {
  // Small lambda_m with the true compactness ceiling gives a negative bound.
  const ThresholdResult res = threshold_p(1, 1.0, base_params());
  CHECK(res.threshold < 0.0);
  CHECK(res.all_lambda_admissible);
}

TEST_CASE("pure-power threshold matches grid-search oracle", "[thresholds][oracle]") {
  const ProblemParams params = base_params();
  const ThresholdResult res = threshold_p(1, 1.0, params);

  const double cstar = ps_ceiling(4, 2.0);
  const auto bracket = [&](double tau) {
    return 1.0 / (2.0 * tau) - cstar / (tau * tau * tau) - tau / 4.0;
  };
  const auto [gt, gv] = log_grid_max(bracket, 1e-6, 1e6, 1'000'000);
  const double oracle = params.r * gv;
  INFO("threshold " << res.threshold << " oracle " << oracle << " grid tau " << gt);
  CHECK(res.threshold >= oracle - 1e-12);
  CHECK(std::abs(res.threshold - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)));
  CHECK(res.sup_value == Catch::Approx(bracket(res.tau_star)).margin(1e-12));
  CHECK(res.all_lambda_admissible == (res.threshold <= 0.0));
}

TEST_CASE("pure-power threshold is monotone and diverges in lambda_m", "[thresholds]") {
  const ProblemParams params = base_params();
  double lambda_m = 1.0;
  double prev = threshold_p(1, lambda_m, params).threshold;
  double first_positive = 0.0;
  for (int k = 1; k <= 12; ++k) {
    lambda_m *= 2.0;
    const double cur = threshold_p(1, lambda_m, params).threshold;
    CHECK(cur >= prev);
    prev = cur;
    if (first_positive == 0.0 && cur > 0.0) first_positive = cur;
  }
  CHECK(prev > 0.0);
  CHECK(prev > 100.0 * std::max(first_positive, 1.0));
}

TEST_CASE("pure-power threshold rejects misuse", "[thresholds]") {
  ProblemParams params = base_params();
  params.q = 1.5;
  CHECK_THROWS_AS(threshold_p(1, 1.0, params), std::invalid_argument);
  params = base_params();
  params.r = 2.0;  // resonant exponent not covered by the non-resonant bound
  CHECK_THROWS_AS(threshold_p(1, 1.0, params), std::invalid_argument);
  params = base_params();
  CHECK_THROWS_AS(threshold_p(0, 1.0, params), std::invalid_argument);
  CHECK_THROWS_AS(threshold_p(1, -1.0, params), std::invalid_argument);
}

TEST_CASE("two-power threshold matches grid-search oracle and dominates", "[thresholds][oracle]") {
  ProblemParams params = base_params();
  params.q = 1.5;
  const ThresholdResult pq = threshold_pq(1, 1.0, params);

  const double cstar = ps_ceiling(4, 2.0);
  const auto bracket = [&](double tau) {
    return 1.0 / (2.0 * tau) + (1.0 / 1.5) * std::pow(tau, -1.5) -
           cstar / (tau * tau * tau) - tau / 4.0;
  };
  const auto [gt, gv] = log_grid_max(bracket, 1e-6, 1e6, 1'000'000);
  const double oracle = params.r * gv;
  INFO("threshold " << pq.threshold << " oracle " << oracle << " grid tau " << gt);
  CHECK(std::abs(pq.threshold - oracle) <= 1e-6 * std::max(1.0, std::abs(oracle)));

  const ThresholdResult pure = threshold_p(1, 1.0, base_params());
  CHECK(pq.threshold >= pure.threshold);
}

TEST_CASE("general bound with volume constants reproduces the pure threshold", "[thresholds]") {
  ProblemParams params = base_params();
  params.volume = 2.0;
  HypothesisConstants h;
  h.alpha0 = 0.0;
  h.alpha = 0.0;
  h.beta = std::pow(params.volume, 1.0 - params.r / params.p);
  h.gamma = std::pow(params.volume, -params.p / (params.dimension - params.p));
  h.cstar = ps_ceiling(params.dimension, params.p);
  h.q = 1.5;
  h.p = params.p;
  h.r = params.r;
  h.p_star = params.p_star();
  const ThresholdResult via_nu = nu_general(h, 3.0);
  const ThresholdResult direct = threshold_p(1, 3.0, params);
  CHECK(std::abs(via_nu.threshold - direct.threshold) <=
        1e-10 * std::max(1.0, std::abs(direct.threshold)));
}

TEST_CASE("general bound decreases in the compactness ceiling", "[thresholds]") {
  HypothesisConstants h = generic_constants();
  const ThresholdResult a = nu_general(h, 1.0);
  h.cstar *= 2.0;
  const ThresholdResult b = nu_general(h, 1.0);
  CHECK(b.threshold < a.threshold);
}

TEST_CASE("general bound matches grid oracle on generic constants", "[thresholds][oracle]") {
  const HypothesisConstants h = generic_constants();
  const ThresholdResult res = nu_general(h, 1.0);
  const auto bracket = [&](double tau) {
    return 1.0 / (2.0 * tau) + (1.0 / 1.5) * std::pow(tau, -1.5) - 1.0 / std::pow(tau, 3.0) -
           tau / 4.0;
  };
  const auto [gt, gv] = log_grid_max(bracket, 1e-6, 1e6, 1'000'000);
  CHECK(std::abs(res.threshold - (h.r / h.beta) * gv) <= 1e-6 * std::max(1.0, std::abs(gv)));
  (void)gt;
}

TEST_CASE("resonant bound analytic and oracle checks", "[thresholds][oracle]") {
  HypothesisConstants h = generic_constants();
  h.r = h.p;

  SECTION("alpha = 0 keeps the bound below lambda_m") {
    auto h0 = h;
    h0.alpha = 0.0;
    // sup of -1/tau^2 - tau^2/4 is -1 at tau = sqrt(2).
    const ThresholdResult res = nu_resonant(h0, 1.0);
    CHECK(res.tau_star == Catch::Approx(std::sqrt(2.0)).margin(1e-8));
    CHECK(res.sup_value == Catch::Approx(-1.0).margin(1e-12));
    CHECK(res.threshold == Catch::Approx(-1.0).margin(1e-11));
    CHECK(res.threshold < 1.0);
    CHECK(res.all_lambda_admissible);
  }

  SECTION("lower-bound audit at tau = 1") {
    const ThresholdResult res = nu_resonant(h, 1.0);
    const double at_one = h.alpha / h.q - h.cstar - h.gamma / h.p_star;
    CHECK(res.threshold >= 1.0 + h.p * at_one - 1e-12);
  }

  SECTION("grid oracle on generic constants") {
    const ThresholdResult res = nu_resonant(h, 1.0);
    const auto bracket = [&](double tau) {
      return (1.0 / 1.5) * std::pow(tau, -0.5) - 1.0 / (tau * tau) - 0.25 * tau * tau;
    };
    const auto [gt, gv] = log_grid_max(bracket, 1e-6, 1e6, 1'000'000);
    CHECK(std::abs(res.threshold - (1.0 + 2.0 * gv)) <= 1e-6 * std::max(1.0, std::abs(gv)));
    (void)gt;
  }

  SECTION("rejects r != p") {
    CHECK_THROWS_AS(nu_resonant(generic_constants(), 1.0), std::invalid_argument);
  }
}

TEST_CASE("two-power threshold resonant routing", "[thresholds]") {
  ProblemParams params = base_params();
  params.q = 1.5;
  params.r = params.p;  // q* = 4*1.5/2.5 = 2.4 >= p
  const ThresholdResult via_pq = threshold_pq(1, 1.0, params);

  HypothesisConstants h;
  h.alpha0 = 0.0;
  h.alpha = std::pow(params.volume, 1.0 - *params.q / params.p);
  h.beta = 1.0;
  h.gamma = std::pow(params.volume, -params.p / (params.dimension - params.p));
  h.cstar = ps_ceiling(params.dimension, params.p);
  h.q = *params.q;
  h.p = params.p;
  h.r = params.p;
  h.p_star = params.p_star();
  const ThresholdResult via_nu = nu_resonant(h, 1.0);
  CHECK(via_pq.threshold == via_nu.threshold);
  CHECK(via_pq.tau_star == via_nu.tau_star);

  ProblemParams bad = base_params();
  bad.q = 1.2;  // q* = 4*1.2/2.8 < 2 = p: outside the resonant case
  bad.r = bad.p;
  CHECK_THROWS_AS(threshold_pq(1, 1.0, bad), std::invalid_argument);
}

TEST_CASE("threshold brackets decay at audit endpoints", "[thresholds]") {
  const HypothesisConstants h = generic_constants();
  const BracketFunction f = bracket_general(h, 1.0);
  const SupResult s = sup_tau(f, 1e-12);
  CHECK(f(1e-9) < s.value);
  CHECK(f(1e9) < s.value);

  HypothesisConstants hr = h;
  hr.r = hr.p;
  const BracketFunction g = bracket_resonant(hr, 1.0);
  const SupResult sr = sup_tau(g, 1e-12);
  CHECK(g(1e-9) < sr.value);
  CHECK(g(1e9) < sr.value);
}

TEST_CASE("threshold operations are bit-reproducible", "[thresholds]") {
  const ProblemParams params = base_params();
  const ThresholdResult a = threshold_p(2, 7.5, params);
  const ThresholdResult b = threshold_p(2, 7.5, params);
  CHECK(a.tau_star == b.tau_star);
  CHECK(a.sup_value == b.sup_value);
  CHECK(a.threshold == b.threshold);
}

TEST_CASE("upper envelope diagnostics", "[thresholds]") {
  SECTION("two-term root") {
    HypothesisConstants h = generic_constants();
    h.alpha = 0.0;
    // lambda = 0: envelope = tau^2/2 - tau^4/4, zero at tau = sqrt(2).
    const double root = std::sqrt(2.0);
    const std::vector<double> grid{0.5, 1.0, root, 2.0};
    const std::vector<double> env = envelope_upper(h, 1.0, 0.0, grid);
    REQUIRE(env.size() == 4);
    CHECK(std::abs(env[2]) < 1e-12);
    CHECK(env[1] > 0.0);
    CHECK(env[3] < 0.0);
  }

  SECTION("above the bound the envelope stays below the ceiling") {
    const HypothesisConstants h = generic_constants();
    const ThresholdResult nu = nu_general(h, 1.0);
    const double lambda = std::max(nu.threshold, 0.0) * 1.01 + 1e-6;
    std::vector<double> grid;
    for (int i = 0; i <= 4096; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 4096.0));
    const std::vector<double> env = envelope_upper(h, 1.0, lambda, grid);
    double mx = env.front();
    bool nonpositive_somewhere = false;
    for (double v : env) {
      mx = std::max(mx, v);
      if (v <= 0.0) nonpositive_somewhere = true;
    }
    CHECK(mx < h.cstar);
    CHECK(nonpositive_somewhere);
  }

  SECTION("resonant variant and validation") {
    HypothesisConstants h = generic_constants();
    h.r = h.p;
    const std::vector<double> grid{1.0};
    // tau = 1: (lambda_m - lambda)/2 + alpha/q * lambda_m^{3/4} - gamma/4.
    const std::vector<double> env = envelope_upper(h, 1.0, 3.0, grid);
    CHECK(env[0] == Catch::Approx((1.0 - 3.0) / 2.0 + 1.0 / 1.5 - 0.25).margin(1e-14));
    CHECK_THROWS_AS(envelope_upper(h, 1.0, -1.0, grid), std::invalid_argument);
    CHECK_THROWS_AS(envelope_upper(h, 1.0, 1.0, std::vector<double>{0.0}),
                    std::invalid_argument);
  }
}

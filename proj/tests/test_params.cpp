#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>

#include "plcrit/params.hpp"

using namespace plcrit;

TEST_CASE("critical exponent closed form", "[params]") {
  CHECK(critical_exponent(3, 2.0) == Catch::Approx(6.0).margin(1e-14));
  CHECK(critical_exponent(4, 2.0) == Catch::Approx(4.0).margin(1e-14));
  CHECK(critical_exponent(3, 1.5) == Catch::Approx(3.0).margin(1e-14));
}

TEST_CASE("critical exponent rejects out-of-range inputs", "[params]") {
  CHECK_THROWS_AS(critical_exponent(3, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(critical_exponent(3, 3.5), std::invalid_argument);
  CHECK_THROWS_AS(critical_exponent(3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(critical_exponent(3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(critical_exponent(1, 0.5), std::invalid_argument);
}

TEST_CASE("problem params validation", "[params]") {
  ProblemParams ok;
  ok.dimension = 3;
  ok.p = 2.0;
  ok.r = 3.0;
  ok.volume = 1.0;
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.p_star() == Catch::Approx(6.0));
  CHECK_FALSE(ok.has_q());
  CHECK(ok.model() == Model::p_only);

  ProblemParams with_q = ok;
  with_q.q = 1.5;
  CHECK_NOTHROW(with_q.validate());
  CHECK(with_q.model() == Model::pq);

  SECTION("r below p rejected") {
    ProblemParams bad = ok;
    bad.r = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("r at critical exponent rejected") {
    ProblemParams bad = ok;
    bad.r = 6.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("r equal to p accepted") {
    ProblemParams res = ok;
    res.r = 2.0;
    CHECK_NOTHROW(res.validate());
  }
  SECTION("q outside (1, p) rejected") {
    ProblemParams bad = ok;
    bad.q = 2.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.q = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("nonpositive volume rejected") {
    ProblemParams bad = ok;
    bad.volume = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("negative lambda rejected when present") {
    ProblemParams bad = ok;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("lambda zero accepted as the diagnostic limit") {
    ProblemParams zero = ok;
    zero.lambda = 0.0;
    CHECK_NOTHROW(zero.validate());
  }
}

TEST_CASE("hypothesis constants validation", "[params]") {
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
  CHECK_NOTHROW(h.validate());

  SECTION("alpha may vanish") {
    h.alpha = 0.0;
    CHECK_NOTHROW(h.validate());
  }
  SECTION("resonant exponent r = p accepted") {
    h.r = 2.0;
    CHECK_NOTHROW(h.validate());
  }
  SECTION("positivity of beta, gamma, cstar enforced") {
    auto bad = h;
    bad.beta = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.gamma = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.cstar = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("exponent ordering enforced") {
    auto bad = h;
    bad.q = 2.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.r = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.r = 5.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

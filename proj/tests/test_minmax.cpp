#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/minmax.hpp"
#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"

using plcrit::build_box_mesh;
using plcrit::deflated_multisolve;
using plcrit::eigs_linear_p2;
using plcrit::EigenSequence;
using plcrit::EnergyModel;
using plcrit::EnergyReport;
using plcrit::FemFunction;
using plcrit::geometry_audit;
using plcrit::GeometryAuditReport;
using plcrit::IterationTrace;
using plcrit::mountain_pass;
using plcrit::MountainPassResult;
using plcrit::origin_audit;
using plcrit::ProblemParams;
using plcrit::ps_ceiling;
using plcrit::ps_diagnostic;
using plcrit::scan_lambda;
using plcrit::SimplicialMesh;
using plcrit::SolverConfig;
using plcrit::threshold_p;

namespace {

ProblemParams cube_params(double lambda) {
  ProblemParams params;
  params.dimension = 3;
  params.p = 2.0;
  params.r = 4.0;
  params.volume = 1.0;
  params.lambda = lambda;
  return params;
}

SolverConfig test_config() {
  SolverConfig config;
  config.path_nodes = 17;
  config.max_iterations = 1500;
  return config;
}

FemFunction seed_endpoint(const EnergyModel& model, const ProblemParams& params,
                          const EigenSequence& eigs, int index, double radius) {
  FemFunction u;
  u.mesh = &model.mesh();
  u.coefficients = eigs.pairs[index].function.coefficients;
  u.coefficients /= model.value_norm_w(u, params.p);
  return plcrit::detail::valley_endpoint(model, params, u, radius);
}

}  // namespace

TEST_CASE("solver configuration rejects out-of-range knobs") {
  SolverConfig ok;
  CHECK_NOTHROW(ok.validate());
  SolverConfig bad = ok;
  bad.path_nodes = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.grad_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.deflation_delta = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.backtrack = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.seed_parallelism = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("origin stays a strict local minimizer at moderate lambda") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const auto report = origin_audit(model, cube_params(50.0), {1e-3, 1e-2});
  REQUIRE(report.probes.size() == 2);
  CHECK(report.all_positive);
  for (const auto& probe : report.probes) {
    CHECK(probe.positive);
    CHECK(probe.min_energy > 0.0);
  }
}

TEST_CASE("large lambda shrinks the positive window to small radii") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const auto report = origin_audit(model, cube_params(1e6), {1e-3, 1e-2, 0.1, 1.0});
  REQUIRE(report.probes.size() == 4);
  CHECK(report.probes[0].positive);
  CHECK_FALSE(report.probes[2].positive);
  CHECK_FALSE(report.probes[3].positive);
  CHECK_FALSE(report.all_positive);
}

TEST_CASE("lambda zero keeps every audited radius positive below the critical scale") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const auto report = origin_audit(model, cube_params(0.0), {1e-3, 1e-2, 0.1, 1.0});
  CHECK(report.all_positive);
}

TEST_CASE("energy along each ray from the origin starts positive") {
  const SimplicialMesh mesh = build_box_mesh(3, {3, 3, 3}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const ProblemParams params = cube_params(50.0);
  std::mt19937 rng(7u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    FemFunction u;
    u.mesh = &mesh;
    u.coefficients.resize(mesh.interior_count());
    for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients[i] = gauss(rng);
    const EnergyReport base = model.potentials(u, params);
    REQUIRE(base.I_p > 0.0);
    // Small enough that the p-term dominates both sinks with margin 4.
    const double t_sub = std::pow(base.I_p / (4.0 * *params.lambda * base.G),
                                  1.0 / (params.r - params.p));
    const double t_crit =
        std::pow(base.I_p / (4.0 * base.H), 1.0 / (params.p_star() - params.p));
    const double t = 0.5 * std::min({t_sub, t_crit, 1.0});
    FemFunction scaled = u;
    scaled.coefficients *= t;
    CHECK(model.potentials(scaled, params).E > 0.0);
  }
}

TEST_CASE("origin audit rejects bad inputs") {
  const SimplicialMesh mesh = build_box_mesh(3, {3, 3, 3}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  CHECK_THROWS_AS(origin_audit(model, cube_params(1.0), {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(origin_audit(model, cube_params(1.0), {0.1}, 1u, 0), std::invalid_argument);
  ProblemParams no_lambda = cube_params(1.0);
  no_lambda.lambda.reset();
  CHECK_THROWS_AS(origin_audit(model, no_lambda, {0.1}), std::invalid_argument);
}

TEST_CASE("geometry audit certifies both halves above the threshold") {
  const SimplicialMesh mesh = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 2);
  ProblemParams params = cube_params(1.0);
  const double nu2 = threshold_p(2, eigs.pairs[1].value, params).threshold;
  params.lambda = 1.25 * nu2;

  const auto report = geometry_audit(model, params, 2, eigs);
  CHECK(report.m == 2);
  CHECK(report.lambda_m == eigs.pairs[1].value);
  CHECK(report.rayleigh_max <= eigs.pairs[1].value * (1.0 + 1e-9));
  CHECK(report.endpoint_nonpositive);
  CHECK(report.sup_endpoint <= 0.0);
  CHECK(report.path_below_ceiling);
  CHECK(report.sup_path < report.ceiling);
  CHECK(report.ceiling == ps_ceiling(3, 2.0));
  REQUIRE(report.tau_grid.size() == 64);
  REQUIRE(report.sup_measured.size() == 64);
  REQUIRE(report.envelope_bound.size() == 64);
  CHECK(report.envelope_min_slack >= -1e-8);
}

TEST_CASE("geometry audit at lambda zero fails the ceiling half") {
  const SimplicialMesh mesh = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  const auto report = geometry_audit(model, cube_params(0.0), 1, eigs);
  // The critical sink still produces negative endpoints at large scale, but
  // the path tops out above the ceiling: nothing certifies at lambda = 0.
  CHECK(report.endpoint_nonpositive);
  CHECK_FALSE(report.path_below_ceiling);
  CHECK(report.envelope_min_slack >= -1e-8);
}

TEST_CASE("geometry audit rejects bad inputs") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  CHECK_THROWS_AS(geometry_audit(model, cube_params(1.0), 2, eigs), std::invalid_argument);
  CHECK_THROWS_AS(geometry_audit(model, cube_params(1.0), 0, eigs), std::invalid_argument);
  const SimplicialMesh other = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel other_model(other);
  CHECK_THROWS_AS(geometry_audit(other_model, cube_params(1.0), 1, eigs),
                  std::invalid_argument);
}

TEST_CASE("mountain pass finds a critical point in the energy window") {
  const SimplicialMesh mesh = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  ProblemParams params = cube_params(1.0);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, params).threshold;
  params.lambda = 1.25 * nu1;
  const SolverConfig config = test_config();

  const auto audit = geometry_audit(model, params, 1, eigs, config.seed);
  const FemFunction endpoint = seed_endpoint(model, params, eigs, 0, audit.radius);
  const MountainPassResult result = mountain_pass(model, params, config, endpoint);
  REQUIRE(result.converged);
  CHECK(result.point.grad_dual_norm < config.grad_tol);
  CHECK(result.point.energy > 0.0);
  CHECK(result.point.energy < ps_ceiling(3, 2.0));
  CHECK(result.point.found_at_lambda == *params.lambda);
  CHECK(result.trace.energies.size() == result.trace.grad_norms.size());

  SECTION("the mirrored endpoint returns the mirrored point at the same level") {
    FemFunction mirrored = endpoint;
    mirrored.coefficients = -mirrored.coefficients;
    const MountainPassResult twin = mountain_pass(model, params, config, mirrored);
    REQUIRE(twin.converged);
    CHECK(std::abs(twin.point.energy - result.point.energy) <=
          1e-10 * (1.0 + std::abs(result.point.energy)));
    CHECK((twin.point.function.coefficients + result.point.function.coefficients)
              .cwiseAbs()
              .maxCoeff() <= 1e-12 * result.point.function.coefficients.cwiseAbs().maxCoeff());
    CHECK(twin.point.pair_tag == result.point.pair_tag);
  }

  SECTION("raising lambda lowers the min-max level") {
    ProblemParams higher = params;
    higher.lambda = 2.0 * *params.lambda;
    const MountainPassResult deeper = mountain_pass(model, higher, config, endpoint);
    REQUIRE(deeper.converged);
    CHECK(deeper.point.energy <= result.point.energy + 1e-12);
  }

  SECTION("a converged trace classifies as a PS sequence") {
    const auto diag = ps_diagnostic(result.trace, ps_ceiling(3, 2.0));
    CHECK(diag.ps_sequence);
    CHECK(diag.level == Catch::Approx(result.point.energy).epsilon(1e-6));
  }
}

TEST_CASE("mountain pass rejects invalid endpoints") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const SolverConfig config = test_config();
  ProblemParams params = cube_params(100.0);

  FemFunction zero;
  zero.mesh = &mesh;
  zero.coefficients = Eigen::VectorXd::Zero(mesh.interior_count());
  CHECK_THROWS_AS(mountain_pass(model, params, config, zero), std::invalid_argument);

  FemFunction ridge;
  ridge.mesh = &mesh;
  ridge.coefficients = Eigen::VectorXd::Constant(mesh.interior_count(), 1e-6);
  CHECK_THROWS_AS(mountain_pass(model, params, config, ridge), std::invalid_argument);

  ProblemParams no_lambda = params;
  no_lambda.lambda.reset();
  FemFunction valley = ridge;
  valley.coefficients *= 1e9;
  CHECK_THROWS_AS(mountain_pass(model, no_lambda, config, valley), std::invalid_argument);
}

TEST_CASE("an exhausted iteration budget reports a diagnosable failure") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  ProblemParams params = cube_params(1.0);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, params).threshold;
  params.lambda = 1.25 * nu1;
  SolverConfig config = test_config();
  config.max_iterations = 2;
  const auto audit = geometry_audit(model, params, 1, eigs, config.seed);
  const FemFunction endpoint = seed_endpoint(model, params, eigs, 0, audit.radius);
  const MountainPassResult result = mountain_pass(model, params, config, endpoint);
  CHECK_FALSE(result.converged);
  CHECK_FALSE(result.diagnostic.empty());
  CHECK(result.trace.energies.size() >= 1);
}

TEST_CASE("multisolve with one seed reduces to a bare mountain pass") {
  const SimplicialMesh mesh = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  ProblemParams params = cube_params(1.0);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, params).threshold;
  params.lambda = 1.25 * nu1;
  const SolverConfig config = test_config();

  const auto accepted = deflated_multisolve(model, params, config, 1, eigs);
  REQUIRE(accepted.size() == 1);

  const auto audit = geometry_audit(model, params, 1, eigs, config.seed);
  const FemFunction endpoint = seed_endpoint(model, params, eigs, 0, audit.radius);
  const MountainPassResult direct = mountain_pass(model, params, config, endpoint);
  REQUIRE(direct.converged);
  CHECK(accepted[0].energy == direct.point.energy);
  CHECK(accepted[0].pair_tag == direct.point.pair_tag);
}

TEST_CASE("multisolve returns distinct pairs inside the window") {
  const SimplicialMesh mesh = build_box_mesh(3, {5, 5, 5}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 2);
  ProblemParams params = cube_params(1.0);
  const double nu2 = threshold_p(2, eigs.pairs[1].value, params).threshold;
  params.lambda = 1.25 * nu2;
  const SolverConfig config = test_config();

  const auto accepted = deflated_multisolve(model, params, config, 2, eigs);
  REQUIRE(accepted.size() >= 1);
  const double ceiling = ps_ceiling(3, 2.0);
  for (const auto& pt : accepted) {
    CHECK(pt.grad_dual_norm < config.grad_tol);
    CHECK(pt.energy > 0.0);
    CHECK(pt.energy < ceiling);
    CHECK(pt.found_at_lambda == *params.lambda);
  }
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (std::size_t j = i + 1; j < accepted.size(); ++j) {
      CHECK(plcrit::detail::distinct_pairs(model, accepted[i], accepted[j], params.p,
                                           config.deflation_delta));
    }

  SECTION("accepted solutions satisfy the weak form against random directions") {
    std::mt19937 rng(11u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& pt : accepted) {
      for (int trial = 0; trial < 20; ++trial) {
        FemFunction v;
        v.mesh = &mesh;
        v.coefficients.resize(mesh.interior_count());
        for (Eigen::Index i = 0; i < v.coefficients.size(); ++i) v.coefficients[i] = gauss(rng);
        v.coefficients /= v.coefficients.norm();
        const auto pair = model.pairings(pt.function, v, params);
        const double residual = pair.a_p + pair.f - *params.lambda * pair.g - pair.h;
        CHECK(std::abs(residual) < 1e-6);
      }
    }
  }

  SECTION("the output is invariant under a global seed-sign flip") {
    EigenSequence flipped = eigs;
    for (auto& pair : flipped.pairs) pair.function.coefficients = -pair.function.coefficients;
    const auto mirrored = deflated_multisolve(model, params, config, 2, flipped);
    REQUIRE(mirrored.size() == accepted.size());
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      CHECK(mirrored[i].pair_tag == accepted[i].pair_tag);
      CHECK(mirrored[i].energy == accepted[i].energy);
    }
  }
}

TEST_CASE("multisolve rejects bad inputs") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  const SolverConfig config = test_config();
  CHECK_THROWS_AS(deflated_multisolve(model, cube_params(100.0), config, 0, eigs),
                  std::invalid_argument);
  EigenSequence empty = eigs;
  empty.pairs.clear();
  CHECK_THROWS_AS(deflated_multisolve(model, cube_params(100.0), config, 1, empty),
                  std::invalid_argument);
}

TEST_CASE("lambda scan carries solutions forward and matches the thresholds") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 2);
  const ProblemParams base = cube_params(1.0);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, base).threshold;
  const double nu2 = threshold_p(2, eigs.pairs[1].value, base).threshold;
  const SolverConfig config = test_config();
  const std::vector<double> grid = {0.2 * nu1, 1.25 * nu1, 1.25 * nu2};

  const auto report = scan_lambda(model, base, grid, config, 2, eigs);
  REQUIRE(report.lambdas.size() == 3);
  REQUIRE(report.counts.size() == 3);
  REQUIRE(report.solutions.size() == 3);
  CHECK(report.eigen_method == "linear-p2");
  for (std::size_t i = 1; i < report.counts.size(); ++i)
    CHECK(report.counts[i] >= report.counts[i - 1]);
  for (std::size_t i = 0; i < report.counts.size(); ++i)
    CHECK(report.counts[i] == static_cast<int>(report.solutions[i].size()));
  REQUIRE(report.predicted.size() == 2);
  CHECK(report.predicted[0].threshold == nu1);
  CHECK(report.predicted[1].threshold == nu2);
  CHECK(report.counts.back() >= 1);
}

TEST_CASE("lambda scan rejects bad grids") {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  const SolverConfig config = test_config();
  CHECK_THROWS_AS(scan_lambda(model, cube_params(1.0), {}, config, 1, eigs),
                  std::invalid_argument);
  CHECK_THROWS_AS(scan_lambda(model, cube_params(1.0), {2.0, 1.0}, config, 1, eigs),
                  std::invalid_argument);
  CHECK_THROWS_AS(scan_lambda(model, cube_params(1.0), {1.0, 2.0}, config, 2, eigs),
                  std::invalid_argument);
}

TEST_CASE("PS diagnostic classifies synthetic traces") {
  const double ceiling = ps_ceiling(3, 2.0);

  SECTION("stabilizing energies with vanishing gradients near the ceiling") {
    IterationTrace trace;
    for (int i = 0; i < 50; ++i) {
      const double w = std::exp(-0.3 * i);
      trace.energies.push_back(0.99 * ceiling * (1.0 - 0.5 * w));
      trace.grad_norms.push_back(1.0 * w + 1e-9);
    }
    const auto diag = ps_diagnostic(trace, ceiling);
    CHECK(diag.ps_sequence);
    CHECK(diag.concentration);
    CHECK(diag.level == Catch::Approx(0.99 * ceiling).epsilon(1e-2));
  }

  SECTION("a stabilized level far from the ceiling raises no flag") {
    IterationTrace trace;
    for (int i = 0; i < 50; ++i) {
      trace.energies.push_back(0.5 * ceiling);
      trace.grad_norms.push_back(std::exp(-0.5 * i));
    }
    const auto diag = ps_diagnostic(trace, ceiling);
    CHECK(diag.ps_sequence);
    CHECK_FALSE(diag.concentration);
  }

  SECTION("noisy non-stabilizing energies are not a PS sequence") {
    IterationTrace trace;
    std::mt19937 rng(3u);
    std::uniform_real_distribution<double> jump(0.0, 10.0);
    for (int i = 0; i < 50; ++i) {
      trace.energies.push_back(jump(rng));
      trace.grad_norms.push_back(1.0 + jump(rng));
    }
    const auto diag = ps_diagnostic(trace, ceiling);
    CHECK_FALSE(diag.ps_sequence);
    CHECK(diag.summary == "no PS sequence detected");
  }

  SECTION("degenerate inputs") {
    IterationTrace empty;
    CHECK_FALSE(ps_diagnostic(empty, ceiling).ps_sequence);
    IterationTrace mismatched;
    mismatched.energies = {1.0};
    CHECK_THROWS_AS(ps_diagnostic(mismatched, ceiling), std::invalid_argument);
    CHECK_THROWS_AS(ps_diagnostic(empty, 0.0), std::invalid_argument);
  }
}

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "plcrit/bracket.hpp"
#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/minmax.hpp"
#include "plcrit/reports.hpp"
#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"

// Acceptance gate: twelve checks covering the supremum oracle, threshold
// algebra, Sobolev and eigenvalue oracles, assembly identities, the
// mountain-pass window, scan monotonicity, and byte-level reproducibility.
// Each check prints one PASS/FAIL line; the exit code is 0 only if all pass.

namespace {

using namespace plcrit;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

int failures = 0;

void report(int id, bool pass, const std::string& name, const std::string& detail) {
  std::printf("[%2d] %s %s (%s)\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

/// Brute-force maximum over a log-uniform grid, evaluated with per-term
/// multiplicative recurrences (tau^e advances by a constant factor per step).
double log_grid_max(const BracketFunction& f, double lo, double hi, int n) {
  const double lt0 = std::log(lo);
  const double dlt = (std::log(hi) - lt0) / (n - 1);
  std::vector<double> cur, fac;
  for (const auto& t : f.terms()) {
    cur.push_back(t.coefficient * std::exp(t.exponent * lt0));
    fac.push_back(std::exp(t.exponent * dlt));
  }
  double best = -std::numeric_limits<double>::infinity();
  const auto& terms = f.terms();
  for (int k = 0; k < n; ++k) {
    if (k % 4096 == 0)  // re-anchor to cap the multiplicative rounding drift
      for (std::size_t j = 0; j < cur.size(); ++j)
        cur[j] = terms[j].coefficient * std::exp(terms[j].exponent * (lt0 + k * dlt));
    double v = 0.0;
    for (std::size_t j = 0; j < cur.size(); ++j) {
      v += cur[j];
      cur[j] *= fac[j];
    }
    best = std::max(best, v);
  }
  return best;
}

ProblemParams random_pr_params(std::mt19937& rng, bool with_q) {
  std::uniform_int_distribution<int> dims(3, 4);
  ProblemParams params;
  params.dimension = dims(rng);
  params.p = std::uniform_real_distribution<double>(1.3, params.dimension - 0.2)(rng);
  const double p_star = critical_exponent(params.dimension, params.p);
  params.r = std::uniform_real_distribution<double>(
      params.p + 0.1, std::min(p_star - 0.1, params.p + 3.0))(rng);
  params.volume = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
  if (with_q) params.q = std::uniform_real_distribution<double>(1.05, params.p - 0.05)(rng);
  return params;
}

HypothesisConstants random_abstract_constants(std::mt19937& rng, bool resonant) {
  std::uniform_real_distribution<double> coef(0.1, 10.0);
  HypothesisConstants h;
  h.p = std::uniform_real_distribution<double>(1.2, 4.0)(rng);
  h.q = std::uniform_real_distribution<double>(1.02, h.p - 0.01)(rng);
  h.r = resonant ? h.p : h.p + std::uniform_real_distribution<double>(0.1, 3.0)(rng);
  h.p_star = h.r + std::uniform_real_distribution<double>(0.2, 4.0)(rng);
  h.alpha = coef(rng);
  h.beta = coef(rng);
  h.gamma = coef(rng);
  h.cstar = coef(rng);
  return h;
}

FemFunction random_function(const SimplicialMesh& mesh, std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  FemFunction u = zero_function(mesh);
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients[i] = dist(rng);
  return u;
}

// Shared expensive eigensolves (used by checks 5 and 6).
struct OracleMeshes {
  SimplicialMesh cube8 = build_box_mesh(3, {8, 8, 8}, {1.0, 1.0, 1.0});
  SimplicialMesh cube16 = build_box_mesh(3, {16, 16, 16}, {1.0, 1.0, 1.0});
  SimplicialMesh square32 = build_box_mesh(2, {32, 32}, {1.0, 1.0});
  EigenSequence cube8_seq, cube16_seq, square32_seq;
};
std::optional<OracleMeshes> oracle;

// ---- 1: supremum vs brute force ----
void check_supremum_oracle() {
  const auto start = clock_type::now();
  std::mt19937 rng(20240817u);
  std::uniform_real_distribution<double> lam(0.5, 50.0);
  double worst = 0.0;
  bool pass = true;
  int done = 0;
  for (int trial = 0; trial < 100 && pass; ++trial) {
    BracketFunction f;
    switch (trial % 4) {
      case 0:
        f = bracket_general(detail::domain_constants(random_pr_params(rng, false), false),
                            lam(rng));
        break;
      case 1:
        f = bracket_general(detail::domain_constants(random_pr_params(rng, true), true),
                            lam(rng));
        break;
      case 2:
        f = bracket_general(random_abstract_constants(rng, false), lam(rng));
        break;
      default:
        f = bracket_resonant(random_abstract_constants(rng, true), lam(rng));
    }
    const SupResult s = sup_tau(f, 1e-12);
    const double grid = log_grid_max(f, 1e-6, 1e6, 1'000'000);
    const double scale = std::max({1.0, std::abs(s.value), std::abs(grid)});
    const double rel = std::abs(s.value - grid) / scale;
    worst = std::max(worst, rel);
    if (rel >= 1e-6 || s.value < grid - 1e-10 * scale) pass = false;
    ++done;
  }
  const double elapsed = seconds_since(start);
  pass = pass && elapsed < 10.0;
  report(1, pass, "supremum search matches a 1e6-point log-grid brute force",
         std::to_string(done) + "/100 brackets, worst rel err " + fmt(worst) + ", " +
             fmt(elapsed) + " s");
}

// ---- 2: general bound specializes to the single-power threshold ----
void check_specialization() {
  std::mt19937 rng(20240818u);
  std::uniform_real_distribution<double> lam(0.5, 50.0);
  double worst = 0.0;
  bool pass = true;
  for (int trial = 0; trial < 50; ++trial) {
    const ProblemParams params = random_pr_params(rng, false);
    const double lambda_m = lam(rng);
    HypothesisConstants h;
    h.p = params.p;
    h.q = 0.5 * (1.0 + params.p);
    h.r = params.r;
    h.p_star = params.p_star();
    h.alpha0 = 0.0;
    h.alpha = 0.0;
    h.beta = std::pow(params.volume, 1.0 - params.r / params.p);
    h.gamma = std::pow(params.volume, -params.p / (params.dimension - params.p));
    h.cstar = ps_ceiling(params.dimension, params.p);
    const ThresholdResult general = nu_general(h, lambda_m);
    const ThresholdResult special = threshold_p(1, lambda_m, params);
    const double rel = std::abs(general.threshold - special.threshold) /
                       std::max(1.0, std::abs(special.threshold));
    worst = std::max(worst, rel);
    if (rel >= 1e-10) pass = false;
  }
  report(2, pass, "general bound with volume constants reproduces the single-power threshold",
         "50 parameter sets, worst rel err " + fmt(worst));
}

// ---- 3: tail domination, monotonicity, divergence ----
void check_threshold_properties() {
  std::mt19937 rng(20240819u);
  std::uniform_real_distribution<double> lam(0.5, 50.0);
  bool tails = true, monotone = true, diverges = true;
  for (int family = 0; family < 4; ++family) {
    for (int trial = 0; trial < 10; ++trial) {
      const bool resonant = family == 3;
      const HypothesisConstants h =
          family < 2 ? detail::domain_constants(random_pr_params(rng, family == 1), family == 1)
                     : random_abstract_constants(rng, resonant);
      const double lambda_m = lam(rng);
      const BracketFunction f =
          resonant ? bracket_resonant(h, lambda_m) : bracket_general(h, lambda_m);
      const SupResult s = sup_tau(f, 1e-12);
      const double scale = 1.0 + std::abs(s.value);
      if (f(1e-9) > s.value + 1e-12 * scale) tails = false;
      if (f(1e9) > s.value + 1e-12 * scale) tails = false;

      double prev = -std::numeric_limits<double>::infinity();
      double value = 0.0;
      double lm = lambda_m;
      for (int doubling = 0; doubling < 40; ++doubling, lm *= 2.0) {
        const ThresholdResult t = resonant ? nu_resonant(h, lm) : nu_general(h, lm);
        if (t.threshold < prev - 1e-9 * (1.0 + std::abs(prev))) monotone = false;
        prev = t.threshold;
        value = t.threshold;
      }
      if (!(value > 1e6)) diverges = false;
    }
  }
  report(3, tails && monotone && diverges,
         "bracket tails sit below the supremum; thresholds grow without bound",
         std::string("tails ") + (tails ? "ok" : "violated") + ", monotone " +
             (monotone ? "ok" : "violated") + ", exceeds 1e6 after 40 doublings " +
             (diverges ? "ok" : "violated"));
}

// ---- 4: Sobolev constant closed form vs radial quadrature ----
void check_sobolev() {
  const auto start = clock_type::now();
  double worst = 0.0;
  for (const auto& [n, p] : std::vector<std::pair<int, double>>{{3, 2.0}, {4, 2.0}, {3, 1.5}}) {
    const double closed = sobolev_constant_closed_form(n, p);
    const double quad = sobolev_constant_quadrature(n, p);
    worst = std::max(worst, std::abs(closed - quad) / closed);
  }
  const double elapsed = seconds_since(start);
  report(4, worst < 1e-4 && elapsed < 5.0, "Sobolev constant closed form matches quadrature",
         "worst rel err " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ---- 5: box eigenvalues against separation-of-variables values ----
void check_eigen_oracle() {
  const auto start = clock_type::now();
  oracle.emplace();
  oracle->cube8_seq = eigs_linear_p2(oracle->cube8, 4);
  oracle->cube16_seq = eigs_linear_p2(oracle->cube16, 4);
  oracle->square32_seq = eigs_linear_p2(oracle->square32, 1);
  const double pi2 = M_PI * M_PI;
  const auto& c16 = oracle->cube16_seq.pairs;
  const auto& c8 = oracle->cube8_seq.pairs;
  const double e1 = std::abs(c16[0].value - 3.0 * pi2) / (3.0 * pi2);
  double cluster = 0.0;
  for (int j = 1; j < 4; ++j)
    cluster = std::max(cluster, std::abs(c16[j].value - 6.0 * pi2) / (6.0 * pi2));
  // Linear elements overshoot the triple cluster by about 2.5% at h = 1/16,
  // so the cluster window is 3% backed by the h-refinement ratio below.
  const double ratio1 = (c8[0].value - 3.0 * pi2) / (c16[0].value - 3.0 * pi2);
  const double ratio2 = (c8[1].value - 6.0 * pi2) / (c16[1].value - 6.0 * pi2);
  const double sq = std::abs(oracle->square32_seq.pairs[0].value - 2.0 * pi2) / (2.0 * pi2);
  const double elapsed = seconds_since(start);
  const bool pass = e1 < 0.02 && cluster < 0.03 && ratio1 > 3.5 && ratio1 < 4.5 &&
                    ratio2 > 3.5 && ratio2 < 4.5 && sq < 0.01 && elapsed < 60.0;
  report(5, pass, "box eigenvalues match separated-variable values",
         "cube first " + fmt(100 * e1) + "%, cluster " + fmt(100 * cluster) +
             "% (window 3%), h-ratios " + fmt(ratio1) + "/" + fmt(ratio2) + ", square first " +
             fmt(100 * sq) + "%, " + fmt(elapsed) + " s");
}

// ---- 6: nonlinear first eigenvalue consistency at p = 2 ----
void check_nonlinear_consistency() {
  const EigenPair cube = first_eigen_p(oracle->cube16, 2.0);
  const EigenPair square = first_eigen_p(oracle->square32, 2.0);
  const double rc =
      std::abs(cube.value - oracle->cube16_seq.pairs[0].value) / oracle->cube16_seq.pairs[0].value;
  const double rs = std::abs(square.value - oracle->square32_seq.pairs[0].value) /
                    oracle->square32_seq.pairs[0].value;
  report(6, rc < 1e-6 && rs < 1e-6, "nonlinear descent at p = 2 matches the linear eigensolve",
         "cube rel err " + fmt(rc) + ", square rel err " + fmt(rs));
}

// ---- 7: finite-difference gradient checks ----
void check_gradients() {
  std::mt19937 rng(20240820u);
  const SimplicialMesh cube = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const SimplicialMesh tess = build_box_mesh(4, {3, 3, 3, 3}, {1.0, 1.0, 1.0, 1.0});
  struct Case {
    const SimplicialMesh* mesh;
    double p, r, q;  // q = 0 for the single-exponent model
    double tol;
  };
  const std::vector<Case> cases = {
      {&cube, 2.0, 4.0, 0.0, 1e-5},  {&cube, 2.0, 4.0, 1.5, 1e-5},
      {&cube, 2.5, 3.0, 0.0, 1e-5},  {&cube, 2.5, 3.0, 2.0, 1e-5},
      {&tess, 3.0, 4.0, 0.0, 1e-5},  {&tess, 3.0, 4.0, 2.2, 1e-5},
      {&cube, 1.5, 2.0, 0.0, 1e-3},  {&cube, 1.5, 2.0, 1.2, 1e-3},
  };
  double worst_strict = 0.0, worst_reg = 0.0;
  bool pass = true;
  for (const auto& c : cases) {
    const EnergyModel model(*c.mesh);
    ProblemParams params;
    params.dimension = c.mesh->dimension;
    params.p = c.p;
    params.r = c.r;
    if (c.q > 0.0) params.q = c.q;
    params.volume = 1.0;
    params.lambda = 7.0;
    for (int point = 0; point < 10; ++point) {
      const FemFunction u = random_function(*c.mesh, rng);
      const FemFunction v = random_function(*c.mesh, rng);
      const Eigen::VectorXd grad = model.gradient(u, params);
      const double dot = grad.dot(v.coefficients);
      const double h = 1e-6;
      FemFunction w = u;
      w.coefficients = u.coefficients + h * v.coefficients;
      const double ep = model.potentials(w, params).E;
      w.coefficients = u.coefficients - h * v.coefficients;
      const double em = model.potentials(w, params).E;
      const double fd = (ep - em) / (2.0 * h);
      const double rel = std::abs(fd - dot) / (1.0 + std::abs(dot));
      (c.tol == 1e-5 ? worst_strict : worst_reg) =
          std::max(c.tol == 1e-5 ? worst_strict : worst_reg, rel);
      if (rel >= c.tol) pass = false;
    }
  }
  report(7, pass, "assembled gradients match central finite differences",
         "p in {2, 2.5, 3} worst rel err " + fmt(worst_strict) + ", regularized p = 1.5 worst " +
             fmt(worst_reg));
}

// ---- 8: norm inequalities on the unit square ----
void check_holder() {
  const SimplicialMesh mesh = build_box_mesh(2, {8, 8}, {1.0, 1.0});
  const EnergyModel model(mesh);
  ProblemParams params;
  params.dimension = 2;
  params.p = 1.8;
  params.q = 1.3;
  params.r = 2.5;
  params.volume = 1.0;
  std::mt19937 rng(20240821u);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    const FemFunction u = random_function(mesh, rng, trial % 2 == 0 ? 1.0 : 10.0);
    const HolderAudit audit = model.holder_audit(u, params);
    worst = std::min({worst, audit.slack_grad_bound, audit.slack_sub_bound,
                      audit.slack_crit_bound});
  }
  report(8, worst >= -1e-10, "norm inequalities hold over 1000 random functions",
         "minimum slack " + fmt(worst));
}

// ---- 9: operator pairing identities and cross bounds ----
void check_pairings() {
  const SimplicialMesh mesh = build_box_mesh(3, {3, 3, 3}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  ProblemParams params;
  params.dimension = 3;
  params.p = 2.5;
  params.r = 3.0;
  params.volume = 1.0;
  std::mt19937 rng(20240822u);
  double worst_identity = 0.0;
  double worst_bound = std::numeric_limits<double>::infinity();
  bool pass = true;
  const double p = params.p;
  for (int trial = 0; trial < 500; ++trial) {
    const FemFunction u = random_function(mesh, rng);
    const FemFunction v = random_function(mesh, rng);
    const EnergyReport ru = model.potentials(u, params);
    const EnergyReport rv = model.potentials(v, params);
    const auto self = model.pairings(u, u, params);
    const double ia = std::abs(self.a_p - p * ru.I_p) / (1.0 + std::abs(self.a_p));
    const double ib = std::abs(self.b_p - p * ru.J_p) / (1.0 + std::abs(self.b_p));
    worst_identity = std::max({worst_identity, ia, ib});
    if (ia >= 1e-12 || ib >= 1e-12) pass = false;
    const auto cross = model.pairings(u, v, params);
    const double bound_a = p * std::pow(ru.I_p, (p - 1.0) / p) * std::pow(rv.I_p, 1.0 / p);
    const double bound_b = p * std::pow(ru.J_p, (p - 1.0) / p) * std::pow(rv.J_p, 1.0 / p);
    const double slack_a = (bound_a - std::abs(cross.a_p)) / (1.0 + bound_a);
    const double slack_b = (bound_b - std::abs(cross.b_p)) / (1.0 + bound_b);
    worst_bound = std::min({worst_bound, slack_a, slack_b});
    if (slack_a < -1e-10 || slack_b < -1e-10) pass = false;
  }
  report(9, pass, "operator pairings recover potentials and obey the dual bounds",
         "worst identity err " + fmt(worst_identity) + ", minimum bound slack " +
             fmt(worst_bound) + " over 500 pairs");
}

// ---- 10: mountain-pass window and sign equivariance ----
void check_mountain_pass() {
  const auto start = clock_type::now();
  const SimplicialMesh mesh = build_box_mesh(3, {8, 8, 8}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  ProblemParams params;
  params.dimension = 3;
  params.p = 2.0;
  params.r = 4.0;
  params.volume = 1.0;
  const EigenSequence eigs = eigs_linear_p2(mesh, 1);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, params).threshold;
  params.lambda = 1.25 * nu1;

  SolverConfig config;
  config.path_nodes = 17;
  config.max_iterations = 1500;
  const GeometryAuditReport audit = geometry_audit(model, params, 1, eigs, config.seed);
  FemFunction direction;
  direction.mesh = &mesh;
  direction.coefficients = eigs.pairs[0].function.coefficients;
  direction.coefficients /= model.value_norm_w(direction, params.p);
  const FemFunction endpoint = detail::valley_endpoint(model, params, direction, audit.radius);

  const MountainPassResult run = mountain_pass(model, params, config, endpoint);
  FemFunction mirrored = endpoint;
  mirrored.coefficients = -endpoint.coefficients;
  const MountainPassResult flip = mountain_pass(model, params, config, mirrored);

  const double ceiling = ps_ceiling(3, 2.0);
  const double energy_gap = std::abs(run.point.energy - flip.point.energy);
  const double mirror_gap =
      (run.point.function.coefficients + flip.point.function.coefficients)
          .lpNorm<Eigen::Infinity>();
  const double elapsed = seconds_since(start);
  const bool pass = run.converged && flip.converged && run.point.grad_dual_norm < 1e-8 &&
                    run.point.energy > 0.0 && run.point.energy < ceiling &&
                    energy_gap <= 1e-10 * (1.0 + std::abs(run.point.energy)) &&
                    mirror_gap == 0.0 && elapsed < 300.0;
  report(10, pass, "mountain pass lands in the energy window and mirrors exactly",
         "E " + fmt(run.point.energy) + " in (0, " + fmt(ceiling) + "), grad " +
             fmt(run.point.grad_dual_norm) + ", energy gap " + fmt(energy_gap) +
             ", mirror gap " + fmt(mirror_gap) + ", " + fmt(elapsed) + " s");
}

// ---- CLI helpers for 11 and 12 ----
int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PLCRIT_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path single_run_dir(const fs::path& root) {
  fs::path found;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) {
      if (!found.empty()) throw std::runtime_error("expected one run directory");
      found = entry.path();
    }
  if (found.empty()) throw std::runtime_error("no run directory produced");
  return found;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path fresh_temp_root(const std::string& tag) {
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  const fs::path dir =
      fs::temp_directory_path() / ("plcrit-acceptance-" + tag + "-" + std::to_string(stamp));
  fs::create_directories(dir);
  return dir;
}

// ---- 11: scan count monotonicity and threshold cross-consistency ----
void check_scan_monotone() {
  const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
  const EnergyModel model(mesh);
  ProblemParams base;
  base.dimension = 3;
  base.p = 2.0;
  base.r = 4.0;
  base.volume = 1.0;
  const EigenSequence eigs = eigs_linear_p2(mesh, 2);
  const double nu1 = threshold_p(1, eigs.pairs[0].value, base).threshold;
  const double nu2 = threshold_p(2, eigs.pairs[1].value, base).threshold;
  const std::vector<double> grid = {0.3 * nu1, 0.9 * nu1, 1.25 * nu1,
                                    1.1 * nu2, 1.25 * nu2, 1.6 * nu2};
  SolverConfig config;
  config.path_nodes = 17;
  config.max_iterations = 1500;
  const LambdaScanReport scan = scan_lambda(model, base, grid, config, 2, eigs);

  bool monotone = true;
  for (std::size_t i = 1; i < scan.counts.size(); ++i)
    if (scan.counts[i] < scan.counts[i - 1]) monotone = false;

  // Cross-command consistency: the CLI threshold table must render the same
  // 17-digit threshold strings as the in-process scan report.
  const fs::path root = fresh_temp_root("threshold");
  const std::string args = "--out \"" + root.string() + "\" threshold --dim 3 --volume " +
                           format17(base.volume) + " --p 2 --r 4 --lambda-m " +
                           format17(eigs.pairs[0].value) + "," + format17(eigs.pairs[1].value);
  bool cross = run_cli(args) == 0;
  if (cross) {
    std::istringstream csv(slurp(single_run_dir(root) / "thresholds.csv"));
    std::string line;
    std::getline(csv, line);  // header
    std::vector<std::string> cli_thresholds;
    while (std::getline(csv, line)) {
      std::istringstream row(line);
      std::string field;
      for (int k = 0; k < 5 && std::getline(row, field, ','); ++k)
        if (k == 4) cli_thresholds.push_back(field);
    }
    cross = cli_thresholds.size() == scan.predicted.size();
    for (std::size_t j = 0; cross && j < cli_thresholds.size(); ++j)
      if (cli_thresholds[j] != format17(scan.predicted[j].threshold)) cross = false;
  }
  fs::remove_all(root);

  std::string counts;
  for (std::size_t i = 0; i < scan.counts.size(); ++i)
    counts += (i ? "," : "") + std::to_string(scan.counts[i]);
  report(11, monotone && cross && scan.counts.back() >= 1,
         "warm-started scan counts are nondecreasing and thresholds cross-check",
         "counts " + counts + ", threshold strings " + (cross ? "bit-equal" : "mismatch"));
}

// ---- 12: byte-identical sequential reruns ----
void check_reproducibility() {
  const fs::path root = fresh_temp_root("scan");
  const fs::path mesh_file = root / "mesh.txt";
  {
    const SimplicialMesh mesh = build_box_mesh(3, {4, 4, 4}, {1.0, 1.0, 1.0});
    std::ofstream out(mesh_file);
    write_mesh(mesh, out);
  }
  const std::string common = "--threads 1 scan --mesh \"" + mesh_file.string() +
                             "\" --p 2 --r 4 --lambdas 80,120 --m-max 1 --path-nodes 17 "
                             "--max-iterations 800 --seed 20240101";
  const fs::path out_a = root / "a";
  const fs::path out_b = root / "b";
  const int code_a = run_cli("--out \"" + out_a.string() + "\" " + common);
  const int code_b = run_cli("--out \"" + out_b.string() + "\" " + common);
  bool pass = code_a == 0 && code_b == 0;
  std::string detail = "exit codes " + std::to_string(code_a) + "/" + std::to_string(code_b);
  if (pass) {
    const fs::path dir_a = single_run_dir(out_a);
    const fs::path dir_b = single_run_dir(out_b);
    const bool csv_equal = slurp(dir_a / "scan.csv") == slurp(dir_b / "scan.csv");
    const bool json_equal = slurp(dir_a / "scan.json") == slurp(dir_b / "scan.json");
    pass = csv_equal && json_equal;
    detail += std::string(", csv ") + (csv_equal ? "identical" : "differs") + ", json " +
              (json_equal ? "identical" : "differs");
  }
  fs::remove_all(root);
  report(12, pass, "sequential scan reruns are byte-identical", detail);
}

}  // namespace

int main() {
  check_supremum_oracle();
  check_specialization();
  check_threshold_properties();
  check_sobolev();
  check_eigen_oracle();
  check_nonlinear_consistency();
  check_gradients();
  check_holder();
  check_pairings();
  check_mountain_pass();
  check_scan_monotone();
  check_reproducibility();
  if (failures == 0)
    std::printf("all acceptance checks passed\n");
  else
    std::printf("%d acceptance checks failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "plcrit/common.hpp"
#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/params.hpp"
#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"

namespace plcrit {

/// Knobs for the mountain-pass search and the deflated multi-solve.
struct SolverConfig {
  double initial_step = 1.0;       ///< first trial step along the preconditioned descent
  double backtrack = 0.5;          ///< step shrink factor per rejected trial
  int max_backtracks = 40;
  double grad_tol = 1e-8;          ///< on grad_dual_norm
  int max_iterations = 2000;       ///< total budget, path deformations plus polish steps
  int path_nodes = 64;             ///< >= 3
  double deflation_delta = 1e-3;   ///< distinctness radius, relative, in the J_p metric
  unsigned seed = 20240101u;
  int seed_parallelism = 1;        ///< seeds launched at once within a multi-solve round

  void validate() const {
    if (!(initial_step > 0.0) || !(backtrack > 0.0) || backtrack >= 1.0)
      throw std::invalid_argument("SolverConfig: step rule parameters out of range");
    if (!(grad_tol > 0.0) || !(deflation_delta > 0.0))
      throw std::invalid_argument("SolverConfig: tolerances must be positive");
    if (max_iterations < 1 || max_backtracks < 1)
      throw std::invalid_argument("SolverConfig: iteration limits must be positive");
    if (path_nodes < 3) throw std::invalid_argument("SolverConfig: need at least 3 path nodes");
    if (seed_parallelism < 1)
      throw std::invalid_argument("SolverConfig: seed_parallelism must be positive");
  }
};

struct CriticalPoint {
  FemFunction function;
  double energy = 0.0;
  double grad_dual_norm = 0.0;
  double found_at_lambda = 0.0;
  std::uint64_t pair_tag = 0;  ///< sign-orbit identifier
};

/// Energy and gradient-norm history of the deformed path's maximal node.
struct IterationTrace {
  std::vector<double> energies;
  std::vector<double> grad_norms;
};

struct MountainPassResult {
  bool converged = false;
  CriticalPoint point;  ///< valid only when converged
  IterationTrace trace;
  int iterations = 0;
  std::string diagnostic;
};

struct OriginProbe {
  double radius = 0.0;
  double min_energy = 0.0;  ///< smallest energy found on the sphere of this radius
  bool positive = false;
};

struct OriginAuditReport {
  std::vector<OriginProbe> probes;
  bool all_positive = false;
};

struct GeometryAuditReport {
  int m = 0;
  double lambda_m = 0.0;       ///< m-th eigenvalue supplied by the sequence
  double rayleigh_max = 0.0;   ///< largest Rayleigh quotient over the sampled directions
  double radius = 0.0;         ///< selected endpoint scale R
  double sup_endpoint = 0.0;   ///< sup of E over {R u}
  double sup_path = 0.0;       ///< sup of E over {t R u, 0 <= t <= 1}
  double ceiling = 0.0;        ///< compactness ceiling the path sup is compared against
  bool endpoint_nonpositive = false;
  bool path_below_ceiling = false;
  double envelope_min_slack = 0.0;  ///< min over the grid of bound minus measured sup
  std::vector<double> tau_grid;
  std::vector<double> sup_measured;
  std::vector<double> envelope_bound;
};

struct LambdaScanReport {
  std::vector<double> lambdas;
  std::vector<int> counts;                  ///< accepted distinct pairs per lambda
  std::vector<ThresholdResult> predicted;   ///< thresholds for m = 1..m_max
  std::string eigen_method;
  std::vector<std::vector<CriticalPoint>> solutions;  ///< per-lambda accepted set
};

struct PsDiagnostic {
  bool ps_sequence = false;      ///< energies stabilized while gradient norms vanish
  double level = 0.0;            ///< estimated limit energy c
  double ceiling = 0.0;
  bool concentration = false;    ///< c within 5% of the ceiling
  std::string summary;
};

namespace detail {

inline std::uint64_t sign_orbit_tag(const FemFunction& u) {
  FemFunction c = u;
  canonical_sign(c);
  std::uint64_t h = fnv1a("pair");
  for (Eigen::Index i = 0; i < c.coefficients.size(); ++i) {
    h = fnv1a(format17(c.coefficients[i]), h);
    h = fnv1a("\n", h);
  }
  return h;
}

/// Smallest J_p distance between u and the sign orbit {v, -v}, relative to
/// the larger of the two norms.
inline double orbit_distance_rel(const EnergyModel& model, const FemFunction& u,
                                 const FemFunction& v, double p) {
  FemFunction d;
  d.mesh = u.mesh;
  d.coefficients = u.coefficients - v.coefficients;
  const double plus = model.value_norm_w(d, p);
  d.coefficients = u.coefficients + v.coefficients;
  const double minus = model.value_norm_w(d, p);
  const double scale =
      std::max({model.value_norm_w(u, p), model.value_norm_w(v, p), 1e-300});
  return std::min(plus, minus) / scale;
}

/// Both points survive as distinct only when they are far in the J_p metric
/// AND separated in energy; everything else collapses to the earlier point.
inline bool distinct_pairs(const EnergyModel& model, const CriticalPoint& a,
                           const CriticalPoint& b, double p, double delta) {
  const double dist = orbit_distance_rel(model, a.function, b.function, p);
  const double de = std::abs(a.energy - b.energy);
  return dist > delta && de > 1e-9 * (1.0 + std::abs(a.energy));
}

/// Smooth repulsion from the sign orbit of an accepted point. Both signs are
/// penalized so the term stays even and the search keeps its u -> -u symmetry.
struct DeflationTerm {
  const FemFunction* point = nullptr;
  double height = 0.0;  ///< penalty value on the orbit itself
  double width = 0.0;   ///< J_p^p falloff scale
};

inline double deflation_value(const EnergyModel& model, const FemFunction& u,
                              const std::vector<DeflationTerm>& terms, double p) {
  double total = 0.0;
  FemFunction d;
  d.mesh = u.mesh;
  for (const auto& t : terms) {
    d.coefficients = u.coefficients - t.point->coefficients;
    const double dp = std::pow(model.value_norm_w(d, p), p);
    d.coefficients = u.coefficients + t.point->coefficients;
    const double dm = std::pow(model.value_norm_w(d, p), p);
    total += t.height * t.width / (t.width + dp) + t.height * t.width / (t.width + dm);
  }
  return total;
}

inline void add_deflation_gradient(const EnergyModel& model, const FemFunction& u,
                                   const std::vector<DeflationTerm>& terms, double p,
                                   Eigen::VectorXd& grad) {
  FemFunction d;
  d.mesh = u.mesh;
  for (const auto& t : terms) {
    for (double sign : {1.0, -1.0}) {
      d.coefficients = u.coefficients - sign * t.point->coefficients;
      const double dp = std::pow(model.value_norm_w(d, p), p);
      const double factor = -t.height * t.width / ((t.width + dp) * (t.width + dp));
      grad += (factor * p) * model.op_value_power(d, p);
    }
  }
}

/// Scales a direction to a valley endpoint just past the ridge: grows the
/// given scale until the energy is nonpositive, then bisects back to the
/// first crossing so the path between origin and endpoint resolves the hump.
/// Returns a zero function when no nonpositive scale is reachable.
inline FemFunction valley_endpoint(const EnergyModel& model, const ProblemParams& params,
                                   const FemFunction& direction, double start_scale) {
  FemFunction u;
  u.mesh = direction.mesh;
  const auto ray_energy = [&](double t) {
    u.coefficients = t * direction.coefficients;
    return model.potentials(u, params).E;
  };
  double hi = start_scale;
  int doublings = 0;
  while (ray_energy(hi) > 0.0 && doublings < 200) {
    hi *= 2.0;
    ++doublings;
  }
  if (doublings >= 200) {
    u.coefficients = Eigen::VectorXd::Zero(direction.coefficients.size());
    return u;
  }
  double lo = 0.0;
  for (double probe = 0.5 * hi; probe > 1e-300 && lo == 0.0; probe *= 0.5)
    if (ray_energy(probe) > 0.0) lo = probe;
  if (lo > 0.0) {
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (ray_energy(mid) <= 0.0)
        hi = mid;
      else
        lo = mid;
    }
    if (ray_energy(1.05 * hi) <= 0.0) hi *= 1.05;
  }
  u.coefficients = hi * direction.coefficients;
  return u;
}

struct PathState {
  std::vector<Eigen::VectorXd> nodes;  ///< node 0 is the origin, last is the endpoint
};

/// Piecewise-linear re-sampling at uniform J_p arc length; endpoints stay put.
inline void equidistribute(const EnergyModel& model, PathState& path, double p) {
  const int n = static_cast<int>(path.nodes.size());
  std::vector<double> cum(n, 0.0);
  FemFunction d;
  d.mesh = &model.mesh();
  for (int i = 1; i < n; ++i) {
    d.coefficients = path.nodes[i] - path.nodes[i - 1];
    cum[i] = cum[i - 1] + model.value_norm_w(d, p);
  }
  const double total = cum[n - 1];
  if (!(total > 0.0)) return;
  std::vector<Eigen::VectorXd> fresh(n);
  fresh[0] = path.nodes[0];
  fresh[n - 1] = path.nodes[n - 1];
  int seg = 1;
  for (int i = 1; i < n - 1; ++i) {
    const double target = total * i / (n - 1);
    while (seg < n - 1 && cum[seg] < target) ++seg;
    const double lo = cum[seg - 1];
    const double hi = cum[seg];
    const double w = hi > lo ? (target - lo) / (hi - lo) : 0.0;
    fresh[i] = (1.0 - w) * path.nodes[seg - 1] + w * path.nodes[seg];
  }
  path.nodes = std::move(fresh);
}

/// Newton polish of the unconstrained first-order system E'(u) = 0. The
/// tangent is factored with SparseLU because it is indefinite at a saddle.
struct PolishOutcome {
  FemFunction u;
  double grad_dual = 0.0;
  bool converged = false;
  int iterations = 0;
};

inline PolishOutcome polish_critical(const EnergyModel& model, const ProblemParams& params,
                                     FemFunction u, double tol, int max_iterations) {
  PolishOutcome out;
  Eigen::VectorXd g = model.gradient(u, params);
  double phi = g.squaredNorm();
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it;
    out.grad_dual = model.dual_norm(g, params.p);
    if (out.grad_dual < tol) {
      out.converged = true;
      break;
    }
    Eigen::SparseMatrix<double> H = model.energy_hessian(u, params);
    H.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(H);
    Eigen::VectorXd step;
    if (lu.info() == Eigen::Success) {
      step = lu.solve(-g);
      if (!step.allFinite()) step = -g;
    } else {
      step = -g;
    }
    bool moved = false;
    double t = 1.0;
    for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
      FemFunction trial = u;
      trial.coefficients += t * step;
      const Eigen::VectorXd gt = model.gradient(trial, params);
      const double pt = gt.squaredNorm();
      if (pt <= (1.0 - 1e-4 * t) * phi) {
        u = std::move(trial);
        g = gt;
        phi = pt;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // Descent stalled on the squared-residual merit; try raw steepest
      // descent on it once, then give up.
      const Eigen::VectorXd d = -g;
      FemFunction trial = u;
      trial.coefficients += (1e-3 / std::max(1.0, std::sqrt(phi))) * d;
      const Eigen::VectorXd gt = model.gradient(trial, params);
      if (gt.squaredNorm() < phi) {
        u = std::move(trial);
        g = gt;
        phi = g.squaredNorm();
      } else {
        break;
      }
    }
  }
  out.grad_dual = model.dual_norm(g, params.p);
  if (out.grad_dual < tol) out.converged = true;
  out.u = std::move(u);
  return out;
}

inline MountainPassResult mountain_pass_impl(const EnergyModel& model,
                                             const ProblemParams& params,
                                             const SolverConfig& config,
                                             const FemFunction& endpoint,
                                             const std::vector<DeflationTerm>& deflation) {
  params.validate();
  config.validate();
  if (!params.lambda) throw std::invalid_argument("mountain_pass: params.lambda must be set");
  if (endpoint.coefficients.size() != model.mesh().interior_count())
    throw std::invalid_argument("mountain_pass: endpoint does not match the mesh");
  if (endpoint.coefficients.isZero(0.0))
    throw std::invalid_argument("mountain_pass: endpoint must be nonzero");
  const double p = params.p;
  const double end_energy = model.potentials(endpoint, params).E;
  if (!(end_energy <= 0.0))
    throw std::invalid_argument("mountain_pass: endpoint must have nonpositive energy");

  MountainPassResult result;
  const int n = config.path_nodes;
  const double trust0 = model.value_norm_w(endpoint, p) / (n - 1);
  PathState path;
  path.nodes.resize(n);
  for (int i = 0; i < n; ++i)
    path.nodes[i] = (static_cast<double>(i) / (n - 1)) * endpoint.coefficients;

  FemFunction node;
  node.mesh = &model.mesh();
  const auto node_energy = [&](const Eigen::VectorXd& coeffs) {
    node.coefficients = coeffs;
    return model.potentials(node, params).E + deflation_value(model, node, deflation, p);
  };

  // The string relaxes every interior node downhill each iteration; the
  // maximal node alone cannot migrate because re-equidistribution pins the
  // ridge crossing between its unmoved neighbours.
  int used = 0;
  int cooldown = 0;
  while (used < config.max_iterations) {
    ++used;
    std::vector<double> energies(n);
    int imax = 1;
    for (int i = 1; i < n - 1; ++i) {
      energies[i] = node_energy(path.nodes[i]);
      if (energies[i] > energies[imax]) imax = i;
    }
    const double emax = energies[imax];
    if (!std::isfinite(emax) || emax < -16.0 * (1.0 + std::abs(end_energy))) {
      // Even the hump is far below the valley scale: the whole string has
      // left the mountain regime and no saddle can be recovered from it.
      result.iterations = used;
      result.diagnostic = "path hump collapsed below the valley scale";
      return result;
    }

    node.coefficients = path.nodes[imax];
    Eigen::VectorXd gmax = model.gradient(node, params);
    add_deflation_gradient(model, node, deflation, p, gmax);
    const double gn = model.dual_norm(gmax, p);
    result.trace.energies.push_back(emax);
    result.trace.grad_norms.push_back(gn);

    // Attempt the local solve of E'(u) = 0 from the maximal node whenever it
    // is near critical, the string has stopped lowering its hump, or on a
    // periodic schedule (the very first hump is the ridge of the seed's ray
    // and already an excellent start). Failed attempts back off.
    const auto& hist = result.trace.energies;
    const bool stalled =
        hist.size() >= 6 &&
        std::abs(hist[hist.size() - 6] - emax) <= 1e-8 * (1.0 + std::abs(emax));
    const bool near_critical = gn < 0.05 * (1.0 + std::abs(emax));
    const bool periodic = used % 25 == 1;
    if (cooldown > 0) --cooldown;
    if (gn < config.grad_tol ||
        ((near_critical || stalled || periodic) && cooldown == 0)) {
      FemFunction start;
      start.mesh = &model.mesh();
      start.coefficients = path.nodes[imax];
      const int budget = std::min(config.max_iterations - used, 80);
      PolishOutcome polish =
          polish_critical(model, params, start, config.grad_tol, std::max(budget, 0));
      used += polish.iterations;
      const EnergyReport report = model.potentials(polish.u, params);
      const bool same_basin = std::abs(report.E - emax) <= 0.5 * (1.0 + std::abs(emax));
      if (polish.converged && report.E > 0.0 && same_basin) {
        result.converged = true;
        result.point.function = polish.u;
        result.point.energy = report.E;
        result.point.grad_dual_norm =
            model.dual_norm(model.gradient(result.point.function, params), p);
        result.point.found_at_lambda = *params.lambda;
        result.point.pair_tag = sign_orbit_tag(result.point.function);
        result.trace.energies.push_back(report.E);
        result.trace.grad_norms.push_back(result.point.grad_dual_norm);
        result.iterations = used;
        return result;
      }
      cooldown = 25;  // keep relaxing before the next attempt
    }

    // One preconditioned descent sweep over the interior nodes. The energy
    // is unbounded below, so each node's displacement is capped by a
    // fraction of the local spacing, and the cap is anchored to the initial
    // segment length so a stretching string cannot compound its own budget.
    FemFunction span;
    span.mesh = &model.mesh();
    for (int i = 1; i < n - 1; ++i) {
      node.coefficients = path.nodes[i];
      Eigen::VectorXd g = model.gradient(node, params);
      add_deflation_gradient(model, node, deflation, p, g);
      const Eigen::VectorXd d = -model.solve_stiffness(g);
      span.coefficients = path.nodes[i + 1] - path.nodes[i - 1];
      const double spacing = 0.5 * model.value_norm_w(span, p);
      span.coefficients = d;
      const double dlen = model.value_norm_w(span, p);
      if (!(dlen > 0.0)) continue;
      const double cap = std::min(0.25 * spacing, 0.5 * trust0);
      double t = std::min(config.initial_step, cap / dlen);
      for (int bt = 0; bt < config.max_backtracks; ++bt, t *= config.backtrack) {
        node.coefficients = path.nodes[i] + t * d;
        const double e = model.potentials(node, params).E +
                         deflation_value(model, node, deflation, p);
        if (e < energies[i]) {
          path.nodes[i] = node.coefficients;
          break;
        }
      }
    }
    equidistribute(model, path, p);
  }

  result.iterations = used;
  result.diagnostic = "iteration cap exceeded before the maximal node became critical";
  return result;
}

}  // namespace detail

/// Estimates inf E over spheres grad_norm_w(u, p) = radius by preconditioned
/// descent with rescaling, from several random starts per radius.
inline OriginAuditReport origin_audit(const EnergyModel& model, const ProblemParams& params,
                                      const std::vector<double>& radii,
                                      unsigned seed = 20240101u, int starts = 8,
                                      int iterations = 160) {
  params.validate();
  if (!params.lambda) throw std::invalid_argument("origin_audit: params.lambda must be set");
  for (double r : radii)
    if (!(r > 0.0)) throw std::invalid_argument("origin_audit: radii must be positive");
  if (starts < 1 || iterations < 1)
    throw std::invalid_argument("origin_audit: starts and iterations must be positive");

  const double p = params.p;
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index ndof = model.mesh().interior_count();

  OriginAuditReport report;
  report.all_positive = true;
  for (double radius : radii) {
    OriginProbe probe;
    probe.radius = radius;
    probe.min_energy = std::numeric_limits<double>::infinity();
    for (int s = 0; s < starts; ++s) {
      FemFunction u;
      u.mesh = &model.mesh();
      u.coefficients.resize(ndof);
      for (Eigen::Index i = 0; i < ndof; ++i) u.coefficients[i] = gauss(rng);
      u.coefficients *= radius / model.grad_norm_w(u, p);
      double energy = model.potentials(u, params).E;
      for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd g = model.gradient(u, params);
        const Eigen::VectorXd d = -model.solve_stiffness(g);
        double t = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
          FemFunction trial;
          trial.mesh = u.mesh;
          trial.coefficients = u.coefficients + t * d;
          const double norm = model.grad_norm_w(trial, p);
          if (!(norm > 0.0)) continue;
          trial.coefficients *= radius / norm;
          const double e = model.potentials(trial, params).E;
          if (e < energy - 1e-14 * (1.0 + std::abs(energy))) {
            u = std::move(trial);
            energy = e;
            moved = true;
            break;
          }
        }
        if (!moved) break;
      }
      probe.min_energy = std::min(probe.min_energy, energy);
    }
    probe.positive = probe.min_energy > 0.0;
    report.all_positive = report.all_positive && probe.positive;
    report.probes.push_back(probe);
  }
  return report;
}

/// Checks the two-sided geometry over the eigen-family: a scale R with
/// sup E(R u) <= 0 over sampled directions, the path sup below the ceiling,
/// and the analytic envelope dominating the measured sup on a shared grid.
inline GeometryAuditReport geometry_audit(const EnergyModel& model, const ProblemParams& params,
                                          int m, const EigenSequence& eigs,
                                          unsigned seed = 20240101u, int samples = 32,
                                          int t_nodes = 64) {
  params.validate();
  if (!params.lambda) throw std::invalid_argument("geometry_audit: params.lambda must be set");
  if (m < 1) throw std::invalid_argument("geometry_audit: m must be >= 1");
  if (static_cast<std::size_t>(m) > eigs.pairs.size())
    throw std::invalid_argument("geometry_audit: sequence has fewer than m pairs");
  if (eigs.mesh_id != mesh_checksum(model.mesh()))
    throw std::invalid_argument("geometry_audit: eigen sequence belongs to a different mesh");
  if (samples < 1 || t_nodes < 2)
    throw std::invalid_argument("geometry_audit: samples and t_nodes out of range");

  const double p = params.p;
  GeometryAuditReport report;
  report.m = m;
  report.lambda_m = eigs.pairs[m - 1].value;
  report.ceiling = ps_ceiling(params.dimension, p);

  // Directions: J_p-normalized random combinations of the first m pairs,
  // plus the bare eigenfunctions themselves.
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FemFunction> dirs;
  for (int i = 0; i < m; ++i) dirs.push_back(eigs.pairs[i].function);
  for (int s = 0; s < samples; ++s) {
    FemFunction u;
    u.mesh = &model.mesh();
    u.coefficients = Eigen::VectorXd::Zero(model.mesh().interior_count());
    for (int i = 0; i < m; ++i) u.coefficients += gauss(rng) * eigs.pairs[i].function.coefficients;
    if (u.coefficients.isZero(0.0)) continue;
    dirs.push_back(std::move(u));
  }
  report.rayleigh_max = 0.0;
  for (auto& u : dirs) {
    u.coefficients /= model.value_norm_w(u, p);
    report.rayleigh_max = std::max(report.rayleigh_max, rayleigh(model, u, p));
  }

  // Scale search: smallest power of two whose endpoint sup is nonpositive.
  FemFunction scaled;
  scaled.mesh = &model.mesh();
  const auto endpoint_sup = [&](double R) {
    double sup = -std::numeric_limits<double>::infinity();
    for (const auto& u : dirs) {
      scaled.coefficients = R * u.coefficients;
      sup = std::max(sup, model.potentials(scaled, params).E);
    }
    return sup;
  };
  report.radius = 1.0;
  report.sup_endpoint = endpoint_sup(report.radius);
  for (int j = 0; j < 40 && !(report.sup_endpoint <= 0.0); ++j) {
    report.radius *= 2.0;
    report.sup_endpoint = endpoint_sup(report.radius);
  }
  report.endpoint_nonpositive = report.sup_endpoint <= 0.0;

  // Path sup on the shared tau grid, tau = t R, t in (0, 1].
  report.tau_grid.resize(t_nodes);
  report.sup_measured.assign(t_nodes, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < t_nodes; ++k) {
    const double t = static_cast<double>(k + 1) / t_nodes;
    report.tau_grid[k] = t * report.radius;
    for (const auto& u : dirs) {
      scaled.coefficients = report.tau_grid[k] * u.coefficients;
      report.sup_measured[k] =
          std::max(report.sup_measured[k], model.potentials(scaled, params).E);
    }
  }
  report.sup_path = std::max(0.0, *std::max_element(report.sup_measured.begin(),
                                                    report.sup_measured.end()));
  report.path_below_ceiling = report.sup_path < report.ceiling;

  // Analytic envelope at the measured Rayleigh bound; it dominates each
  // grid value up to quadrature-level slack.
  const double lambda_hat = std::max(report.lambda_m, report.rayleigh_max);
  const HypothesisConstants h = detail::domain_constants(params, params.has_q());
  report.envelope_bound = envelope_upper(h, lambda_hat, *params.lambda, report.tau_grid);
  report.envelope_min_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < t_nodes; ++k)
    report.envelope_min_slack =
        std::min(report.envelope_min_slack, report.envelope_bound[k] - report.sup_measured[k]);
  return report;
}

/// Elastic-string mountain pass from the origin to a nonpositive-energy
/// endpoint; returns the maximal node as a critical point once its
/// gradient-dual norm passes the tolerance.
inline MountainPassResult mountain_pass(const EnergyModel& model, const ProblemParams& params,
                                        const SolverConfig& config, const FemFunction& endpoint) {
  return detail::mountain_pass_impl(model, params, config, endpoint, {});
}

/// Repeated mountain passes from eigenfunction-direction endpoints, each run
/// repelled from the sign orbits already accepted. Rounds see a frozen
/// deflation set; acceptance is processed in seed order between rounds.
inline std::vector<CriticalPoint> deflated_multisolve(const EnergyModel& model,
                                                      const ProblemParams& params,
                                                      const SolverConfig& config, int k,
                                                      const EigenSequence& eigs,
                                                      std::vector<MountainPassResult>* misses =
                                                          nullptr) {
  params.validate();
  config.validate();
  if (k < 1) throw std::invalid_argument("deflated_multisolve: k must be >= 1");
  if (eigs.pairs.empty())
    throw std::invalid_argument("deflated_multisolve: eigen sequence is empty");
  if (eigs.mesh_id != mesh_checksum(model.mesh()))
    throw std::invalid_argument("deflated_multisolve: eigen sequence belongs to a different mesh");
  const double p = params.p;
  const double ceiling = ps_ceiling(params.dimension, p);

  // Endpoint seeds: J_p-normalized eigen-directions scaled to sit just past
  // the ridge on their ray, so the path between origin and endpoint resolves
  // the hump. Seeds beyond the available pairs are random combinations drawn
  // deterministically.
  const int avail = static_cast<int>(eigs.pairs.size());
  const GeometryAuditReport audit =
      geometry_audit(model, params, std::min(k, avail), eigs, config.seed);
  std::mt19937 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<FemFunction> seeds;
  for (int i = 0; i < k; ++i) {
    FemFunction u;
    u.mesh = &model.mesh();
    if (i < avail) {
      u.coefficients = eigs.pairs[i].function.coefficients;
    } else {
      u.coefficients = Eigen::VectorXd::Zero(model.mesh().interior_count());
      for (int j = 0; j < avail; ++j)
        u.coefficients += gauss(rng) * eigs.pairs[j].function.coefficients;
    }
    u.coefficients /= model.value_norm_w(u, p);
    u = detail::valley_endpoint(model, params, u, audit.radius);
    if (u.coefficients.isZero(0.0) && misses) {
      MountainPassResult miss;
      miss.diagnostic = "seed energy stayed positive under scaling";
      misses->push_back(std::move(miss));
    }
    seeds.push_back(std::move(u));
  }

  std::vector<CriticalPoint> accepted;
  std::vector<bool> resolved(seeds.size(), false);
  const int max_rounds = k;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<detail::DeflationTerm> frozen;
    frozen.reserve(accepted.size());
    for (const auto& pt : accepted) {
      detail::DeflationTerm term;
      term.point = &pt.function;
      term.height = 0.5 * (1.0 + std::abs(pt.energy));
      const double norm = model.value_norm_w(pt.function, p);
      term.width = std::pow(0.25 * std::max(norm, 1e-12), p);
      frozen.push_back(term);
    }

    std::vector<int> pending;
    for (std::size_t i = 0; i < seeds.size(); ++i)
      if (!resolved[i] && !seeds[i].coefficients.isZero(0.0)) pending.push_back(static_cast<int>(i));
    if (pending.empty()) break;

    std::vector<MountainPassResult> results(pending.size());
    const auto run_one = [&](std::size_t j) {
      results[j] = detail::mountain_pass_impl(model, params, config, seeds[pending[j]], frozen);
    };
    if (config.seed_parallelism > 1) {
      std::vector<std::future<void>> tasks;
      for (std::size_t j = 0; j < pending.size(); ++j)
        tasks.push_back(std::async(std::launch::async, run_one, j));
      for (auto& t : tasks) t.get();
    } else {
      for (std::size_t j = 0; j < pending.size(); ++j) run_one(j);
    }

    bool any_new = false;
    for (std::size_t j = 0; j < pending.size(); ++j) {
      const int i = pending[j];
      MountainPassResult& res = results[j];
      if (!res.converged) {
        // A deflated crossing can have index two, which a single string
        // slides off sideways; restart the local solve from the ridge of
        // the seed's own ray, which stays in the seed's symmetry class.
        FemFunction probe;
        probe.mesh = &model.mesh();
        double best_t = 0.0;
        double best_e = 0.0;
        for (int gi = 1; gi <= 128; ++gi) {
          const double t = static_cast<double>(gi) / 128.0;
          probe.coefficients = t * seeds[i].coefficients;
          const double e = model.potentials(probe, params).E;
          if (e > best_e) {
            best_e = e;
            best_t = t;
          }
        }
        if (best_t > 0.0) {
          probe.coefficients = best_t * seeds[i].coefficients;
          const detail::PolishOutcome polish =
              detail::polish_critical(model, params, probe, config.grad_tol, 80);
          const EnergyReport rep = model.potentials(polish.u, params);
          if (polish.converged && rep.E > 0.0) {
            res.converged = true;
            res.point.function = polish.u;
            res.point.energy = rep.E;
            res.point.grad_dual_norm = model.dual_norm(model.gradient(polish.u, params), p);
            res.point.found_at_lambda = *params.lambda;
            res.point.pair_tag = detail::sign_orbit_tag(polish.u);
            res.iterations += polish.iterations;
            res.diagnostic.clear();
            res.trace.energies.push_back(res.point.energy);
            res.trace.grad_norms.push_back(res.point.grad_dual_norm);
          }
        }
      }
      if (!res.converged) {
        resolved[i] = true;  // a failed run will fail again under more deflation
        if (misses) misses->push_back(std::move(res));
        continue;
      }
      // Re-verify the residual under a fresh assembly before accepting.
      const EnergyModel fresh(model.mesh());
      const double recheck =
          fresh.dual_norm(fresh.gradient(res.point.function, params), p);
      const bool in_window = res.point.energy > 0.0 && res.point.energy < ceiling;
      if (recheck >= 2.0 * config.grad_tol || !in_window) {
        resolved[i] = true;
        res.converged = false;
        res.diagnostic = in_window ? "residual failed independent re-verification"
                                   : "energy outside the acceptance window";
        if (misses) misses->push_back(std::move(res));
        continue;
      }
      bool duplicate = false;
      for (const auto& prev : accepted)
        if (!detail::distinct_pairs(model, prev, res.point, p, config.deflation_delta)) {
          duplicate = true;
          break;
        }
      if (duplicate) continue;  // retried next round under the grown deflation set
      accepted.push_back(res.point);
      resolved[i] = true;
      any_new = true;
    }
    if (!any_new) break;
  }
  return accepted;
}

/// Ascending lambda sweep: solutions found at one lambda are re-polished and
/// carried into the next before fresh seeds run, so the counts reflect the
/// accumulated solution set rather than independent searches.
inline LambdaScanReport scan_lambda(const EnergyModel& model, const ProblemParams& base,
                                    const std::vector<double>& lambda_grid,
                                    const SolverConfig& config, int m_max,
                                    const EigenSequence& eigs) {
  if (lambda_grid.empty()) throw std::invalid_argument("scan_lambda: lambda grid is empty");
  for (std::size_t i = 1; i < lambda_grid.size(); ++i)
    if (!(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("scan_lambda: lambda grid must be increasing");
  if (m_max < 1) throw std::invalid_argument("scan_lambda: m_max must be >= 1");
  if (static_cast<std::size_t>(m_max) > eigs.pairs.size())
    throw std::invalid_argument("scan_lambda: sequence has fewer than m_max pairs");
  config.validate();

  LambdaScanReport report;
  report.eigen_method = eigs.method;
  for (int m = 1; m <= m_max; ++m) {
    const double lambda_m = eigs.pairs[m - 1].value;
    report.predicted.push_back(base.has_q() ? threshold_pq(m, lambda_m, base)
                                            : threshold_p(m, lambda_m, base));
  }

  const double p = base.p;
  const double ceiling = ps_ceiling(base.dimension, p);
  std::vector<CriticalPoint> carried;
  for (double lambda : lambda_grid) {
    ProblemParams params = base;
    params.lambda = lambda;

    std::vector<CriticalPoint> kept;
    for (const auto& prev : carried) {
      detail::PolishOutcome polish = detail::polish_critical(
          model, params, prev.function, config.grad_tol, config.max_iterations);
      if (!polish.converged) continue;
      const EnergyReport e = model.potentials(polish.u, params);
      if (!(e.E > 0.0 && e.E < ceiling)) continue;
      CriticalPoint pt;
      pt.function = polish.u;
      pt.energy = e.E;
      pt.grad_dual_norm = polish.grad_dual;
      pt.found_at_lambda = lambda;
      pt.pair_tag = detail::sign_orbit_tag(pt.function);
      bool duplicate = false;
      for (const auto& other : kept)
        if (!detail::distinct_pairs(model, other, pt, p, config.deflation_delta)) {
          duplicate = true;
          break;
        }
      if (!duplicate) kept.push_back(std::move(pt));
    }

    const std::vector<CriticalPoint> found =
        deflated_multisolve(model, params, config, m_max, eigs);
    for (const auto& pt : found) {
      bool duplicate = false;
      for (const auto& other : kept)
        if (!detail::distinct_pairs(model, other, pt, p, config.deflation_delta)) {
          duplicate = true;
          break;
        }
      if (!duplicate) kept.push_back(pt);
    }

    report.lambdas.push_back(lambda);
    report.counts.push_back(static_cast<int>(kept.size()));
    report.solutions.push_back(kept);
    carried = std::move(kept);
  }
  return report;
}

/// Classifies an iteration trace: a numerical PS sequence needs the tail
/// energies to stabilize while the gradient norms vanish; a stabilized level
/// within 5% of the ceiling raises the concentration flag.
inline PsDiagnostic ps_diagnostic(const IterationTrace& trace, double ceiling) {
  if (!(ceiling > 0.0)) throw std::invalid_argument("ps_diagnostic: ceiling must be positive");
  if (trace.energies.size() != trace.grad_norms.size())
    throw std::invalid_argument("ps_diagnostic: trace arrays disagree in length");
  PsDiagnostic out;
  out.ceiling = ceiling;
  const std::size_t n = trace.energies.size();
  if (n == 0) {
    out.summary = "empty trace";
    return out;
  }
  // A trace that ends at a numerically critical point is a PS sequence by
  // itself; otherwise demand a stabilized suffix with vanishing gradients.
  const double elast = trace.energies[n - 1];
  if (trace.grad_norms[n - 1] <= 1e-6 * (1.0 + std::abs(elast))) {
    out.level = elast;
    out.ps_sequence = true;
  } else {
    std::size_t begin = n - 1;
    while (begin > 0 &&
           std::abs(trace.energies[begin - 1] - elast) <= 1e-3 * (1.0 + std::abs(elast)))
      --begin;
    const std::size_t count = n - begin;
    double esum = 0.0;
    double gsum = 0.0;
    for (std::size_t i = begin; i < n; ++i) {
      esum += trace.energies[i];
      gsum += trace.grad_norms[i];
    }
    out.level = esum / count;
    const bool stabilized = count >= std::max<std::size_t>(2, n / 5);
    const bool grads_vanish = (gsum / count) <= 1e-3 * (1.0 + std::abs(out.level));
    out.ps_sequence = stabilized && grads_vanish;
  }
  if (!out.ps_sequence) {
    out.summary = "no PS sequence detected";
    return out;
  }
  out.concentration = std::abs(out.level - ceiling) < 0.05 * ceiling;
  out.summary = out.concentration
                    ? "PS sequence at a level near the compactness ceiling; "
                      "concentration suspected"
                    : "PS sequence confirmed";
  return out;
}

}  // namespace plcrit

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "plcrit/common.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"

namespace plcrit {

struct EigenPair {
  double value = 0.0;
  FemFunction function;  // normalized so p * I_p(function) = 1
  double residual = 0.0;
};

struct EigenSequence {
  std::vector<EigenPair> pairs;
  double p = 2.0;
  std::string method;
  std::uint64_t mesh_id = 0;
};

/// Adjacent-gap clustering of an ascending eigenvalue list. Two neighbors
/// land in the same cluster when their gap is below abs_tol + rel_tol*scale,
/// which separates genuine multiplicity from merely close values.
struct EigenGapReport {
  std::vector<double> gaps;    // size m-1
  std::vector<int> cluster_of; // size m
  int cluster_count = 0;
};

inline EigenGapReport eigen_gap_report(const std::vector<double>& values, double abs_tol = 1e-6,
                                       double rel_tol = 0.02) {
  EigenGapReport report;
  if (values.empty()) return report;
  report.cluster_of.resize(values.size());
  report.cluster_of[0] = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double gap = values[i] - values[i - 1];
    report.gaps.push_back(gap);
    const double scale = std::max(std::abs(values[i]), std::abs(values[i - 1]));
    const bool same = gap <= abs_tol + rel_tol * scale;
    report.cluster_of[i] = same ? report.cluster_of[i - 1] : report.cluster_of[i - 1] + 1;
  }
  report.cluster_count = report.cluster_of.back() + 1;
  return report;
}

inline double rayleigh(const EnergyModel& model, const FemFunction& u, double p) {
  const double gw = model.grad_norm_w(u, p);
  const double vw = model.value_norm_w(u, p);
  if (vw == 0.0) throw std::invalid_argument("quotient undefined for the zero function");
  return std::pow(gw / vw, p);
}

inline double rayleigh(const FemFunction& u, double p) {
  if (u.mesh == nullptr) throw std::invalid_argument("function has no mesh");
  const EnergyModel model(*u.mesh);
  return rayleigh(model, u, p);
}

namespace detail {

inline void normalize_grad(const EnergyModel& model, FemFunction& u, double p) {
  const double gw = model.grad_norm_w(u, p);
  if (gw == 0.0) throw std::invalid_argument("cannot normalize the zero function");
  u.coefficients /= gw;
}

/// Deterministic sign convention: the entry of largest magnitude (first such
/// index on ties) is made positive.
inline void canonical_sign(FemFunction& u) {
  Eigen::Index idx = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) {
    const double mag = std::abs(u.coefficients[i]);
    if (mag > best) {
      best = mag;
      idx = i;
    }
  }
  if (u.coefficients.size() > 0 && u.coefficients[idx] < 0.0) u.coefficients = -u.coefficients;
}

/// Minimizer of I_p(w) + (mu/2) sum_j <b_j, w>^2 - <rhs, w>. The rank-one
/// penalty terms are folded into the tangent solves by a Woodbury update, so
/// sparsity is preserved.
inline Eigen::VectorXd penalized_grad_solve(const EnergyModel& model, const Eigen::VectorXd& rhs,
                                            double p, const std::vector<Eigen::VectorXd>& penalties,
                                            double mu) {
  if (penalties.empty()) return model.solve_grad_power(rhs, p);
  const Eigen::Index n = rhs.size();
  const int k = static_cast<int>(penalties.size());
  Eigen::MatrixXd U(n, k);
  for (int j = 0; j < k; ++j) U.col(j) = penalties[j];

  if (p == 2.0) {
    const Eigen::VectorXd sr = model.solve_stiffness(rhs);
    Eigen::MatrixXd su(n, k);
    for (int j = 0; j < k; ++j) su.col(j) = model.solve_stiffness(U.col(j));
    Eigen::MatrixXd cap = U.transpose() * su;
    cap += Eigen::MatrixXd::Identity(k, k) / mu;
    return sr - su * cap.ldlt().solve(U.transpose() * sr);
  }

  FemFunction w;
  w.mesh = &model.mesh();
  w.coefficients = model.solve_grad_power(rhs, p);
  auto objective = [&](const Eigen::VectorXd& x) {
    FemFunction v;
    v.mesh = &model.mesh();
    v.coefficients = x;
    const Eigen::VectorXd pairings = U.transpose() * x;
    return model.grad_energy_value(v, p) + 0.5 * mu * pairings.squaredNorm() - rhs.dot(x);
  };
  double fx = objective(w.coefficients);
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::VectorXd grad =
        model.op_grad_power(w, p) + mu * (U * (U.transpose() * w.coefficients)) - rhs;
    if (grad.norm() <= 1e-10 * (1.0 + rhs.norm())) break;
    Eigen::SparseMatrix<double> T = model.grad_power_tangent(w, p);
    T = T + 1e-12 * model.stiffness();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(T);
    if (solver.info() != Eigen::Success) break;
    const Eigen::VectorXd sg = solver.solve(grad);
    const Eigen::MatrixXd su = solver.solve(U);
    Eigen::MatrixXd cap = U.transpose() * su;
    cap += Eigen::MatrixXd::Identity(k, k) / mu;
    const Eigen::VectorXd d = -(sg - su * cap.ldlt().solve(U.transpose() * sg));
    const double slope = grad.dot(d);
    if (slope >= 0.0) break;
    double t = 1.0;
    bool stepped = false;
    for (int ls = 0; ls < 48; ++ls) {
      const double ft = objective(w.coefficients + t * d);
      if (std::isfinite(ft) && ft <= fx + 1e-4 * t * slope) {
        w.coefficients += t * d;
        fx = ft;
        stepped = true;
        break;
      }
      t *= 0.5;
    }
    if (!stepped) break;
  }
  return w.coefficients;
}

/// Fixed-point sweep u <- normalize(solve A_p w = B_p u), optionally with
/// penalty functionals deflating previously found pairs. Returns the last
/// quotient value; stops early once it stabilizes.
inline double inverse_iteration(const EnergyModel& model, FemFunction& u, double p,
                                const std::vector<Eigen::VectorXd>& penalties, double mu,
                                int max_steps, double rel_tol, int& used_iterations) {
  double lambda = rayleigh(model, u, p);
  for (int step = 0; step < max_steps; ++step) {
    const Eigen::VectorXd rhs = model.op_value_power(u, p);
    Eigen::VectorXd w = penalized_grad_solve(model, rhs, p, penalties, mu);
    ++used_iterations;
    if (w.norm() == 0.0)
      throw SolverFailure("inverse iteration collapsed to the zero function", lambda, step);
    u.coefficients = std::move(w);
    normalize_grad(model, u, p);
    const double next = rayleigh(model, u, p);
    const bool settled = std::abs(next - lambda) <= rel_tol * (1.0 + std::abs(next));
    lambda = next;
    if (settled) break;
  }
  return lambda;
}

struct PolishResult {
  FemFunction u;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton iteration on the extended system [A_p u - lambda B_p u; p I_p - 1]
/// with the normalization row bordering the (possibly singular) tangent.
/// Falls back to a residual-descent step when the bordered solve stalls.
inline PolishResult polish_eigenpair(const EnergyModel& model, FemFunction u, double lambda,
                                     double p, double tol, int max_iterations) {
  const Eigen::Index n = u.coefficients.size();
  PolishResult out;

  auto residual_parts = [&](const FemFunction& v, double lam, Eigen::VectorXd& r1, double& r2) {
    const Eigen::VectorXd a = model.op_grad_power(v, p);
    const Eigen::VectorXd b = model.op_value_power(v, p);
    r1 = a - lam * b;
    r2 = std::pow(model.grad_norm_w(v, p), p) - 1.0;
  };

  Eigen::VectorXd r1;
  double r2 = 0.0;
  residual_parts(u, lambda, r1, r2);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const double dual = model.dual_norm(r1, p);
    if (dual <= tol && std::abs(r2) <= tol) {
      normalize_grad(model, u, p);
      out.u = u;
      out.lambda = rayleigh(model, u, p);
      Eigen::VectorXd rf;
      double r2f = 0.0;
      residual_parts(out.u, out.lambda, rf, r2f);
      out.residual = model.dual_norm(rf, p);
      out.iterations = iter;
      out.converged = true;
      return out;
    }

    const Eigen::VectorXd a = model.op_grad_power(u, p);
    const Eigen::VectorXd b = model.op_value_power(u, p);
    Eigen::SparseMatrix<double> Mtan = model.grad_power_tangent(u, p);
    Mtan = Mtan - lambda * model.value_power_tangent(u, p);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(Mtan.nonZeros()) + 2 * n + 1);
    for (int col = 0; col < Mtan.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Mtan, col); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index i = 0; i < n; ++i) {
      trips.emplace_back(static_cast<int>(i), static_cast<int>(n), -b[i]);
      trips.emplace_back(static_cast<int>(n), static_cast<int>(i), p * a[i]);
    }
    trips.emplace_back(static_cast<int>(n), static_cast<int>(n), 0.0);
    Eigen::SparseMatrix<double> J(n + 1, n + 1);
    J.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -r1;
    rhs[n] = -r2;

    Eigen::VectorXd step;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(J);
    lu.factorize(J);
    if (lu.info() == Eigen::Success) {
      step = lu.solve(rhs);
      if (!step.allFinite()) step.resize(0);
    }

    const double phi0 = r1.squaredNorm() + r2 * r2;
    auto try_step = [&](const Eigen::VectorXd& dir) -> bool {
      double t = 1.0;
      for (int ls = 0; ls < 40; ++ls) {
        FemFunction cand;
        cand.mesh = u.mesh;
        cand.coefficients = u.coefficients + t * dir.head(n);
        const double lam_cand = lambda + t * dir[n];
        Eigen::VectorXd r1c;
        double r2c = 0.0;
        residual_parts(cand, lam_cand, r1c, r2c);
        const double phi = r1c.squaredNorm() + r2c * r2c;
        if (std::isfinite(phi) && phi <= (1.0 - 1e-4 * t) * phi0) {
          u = std::move(cand);
          lambda = lam_cand;
          r1 = std::move(r1c);
          r2 = r2c;
          return true;
        }
        t *= 0.5;
      }
      return false;
    };

    bool moved = false;
    if (step.size() == n + 1) moved = try_step(step);
    if (!moved) {
      // Residual descent: J^T r is the gradient of 0.5 |r|^2.
      Eigen::VectorXd full(n + 1);
      full.head(n) = r1;
      full[n] = r2;
      Eigen::VectorXd descent = -(J.transpose() * full);
      const double dn = descent.norm();
      if (dn > 0.0) {
        descent *= std::min(1.0, 1.0 / dn);
        moved = try_step(descent);
      }
    }
    if (!moved) break;
  }

  normalize_grad(model, u, p);
  out.u = u;
  out.lambda = rayleigh(model, u, p);
  Eigen::VectorXd rf;
  double r2f = 0.0;
  residual_parts(out.u, out.lambda, rf, r2f);
  out.residual = model.dual_norm(rf, p);
  out.iterations = max_iterations;
  out.converged = false;
  return out;
}

}  // namespace detail

/// First m pairs of the quadratic problem: block inverse iteration on the
/// stiffness/mass pencil with a Rayleigh-Ritz projection each sweep.
/// Functions come back pairwise mass-orthogonal and scaled to u^T K u = 1.
inline EigenSequence eigs_linear_p2(const SimplicialMesh& mesh, int m, double tol = 1e-10,
                                    unsigned seed = 20240101u) {
  if (m < 1) throw std::invalid_argument("at least one pair must be requested");
  EnergyModel model(mesh);
  const Eigen::Index n = mesh.interior_count();
  if (n < m)
    throw std::invalid_argument("mesh has fewer interior vertices than requested pairs");

  const int block = static_cast<int>(std::min<Eigen::Index>(n, m + 8));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < block; ++j) X(i, j) = dist(rng);

  const Eigen::SparseMatrix<double>& K = model.stiffness();
  const Eigen::SparseMatrix<double>& M = model.mass();

  auto ritz = [&](const Eigen::MatrixXd& basis, Eigen::MatrixXd& out) -> Eigen::VectorXd {
    const Eigen::MatrixXd A = basis.transpose() * (K * basis);
    const Eigen::MatrixXd B = basis.transpose() * (M * basis);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(A, B);
    if (ges.info() != Eigen::Success)
      throw SolverFailure("projected eigenproblem failed to converge", 0.0, 0);
    out = basis * ges.eigenvectors();
    return ges.eigenvalues();
  };

  Eigen::MatrixXd Y;
  Eigen::VectorXd values = ritz(X, Y);
  X = Y;
  const double settle = std::max(tol * 1e-2, 1e-15);
  for (int sweep = 0; sweep < 500; ++sweep) {
    Eigen::MatrixXd Z(n, block);
    const Eigen::MatrixXd MX = M * X;
    for (int j = 0; j < block; ++j) Z.col(j) = model.solve_stiffness(MX.col(j));
    const Eigen::VectorXd next = ritz(Z, Y);
    X = Y;
    double change = 0.0;
    for (int j = 0; j < m; ++j)
      change = std::max(change, std::abs(next[j] - values[j]) / (1.0 + std::abs(next[j])));
    values = next;
    if (change <= settle) break;
  }

  EigenSequence seq;
  seq.p = 2.0;
  seq.method = "linear-p2";
  seq.mesh_id = mesh_checksum(mesh);
  seq.pairs.resize(m);
  for (int j = 0; j < m; ++j) {
    FemFunction u;
    u.mesh = &mesh;
    u.coefficients = X.col(j);
    const double scale = u.coefficients.dot(K * u.coefficients);
    u.coefficients /= std::sqrt(scale);
    detail::canonical_sign(u);
    const Eigen::VectorXd res = K * u.coefficients - values[j] * (M * u.coefficients);
    seq.pairs[j].value = values[j];
    seq.pairs[j].residual = model.dual_norm(res, 2.0);
    seq.pairs[j].function = std::move(u);
  }
  return seq;
}

/// First eigenpair of the p-homogeneous problem: positive random start,
/// inverse-iteration sweeps, then a bordered Newton polish to the requested
/// dual-norm residual.
inline EigenPair first_eigen_p(const SimplicialMesh& mesh, double p, unsigned seed = 20240101u,
                               double tol = 1e-8, int max_iterations = 10000) {
  if (p <= 1.0) throw std::invalid_argument("exponent must exceed one");
  EnergyModel model(mesh);
  if (mesh.interior_count() == 0)
    throw std::invalid_argument("mesh has no interior vertices");

  FemFunction u = zero_function(mesh);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients[i] = dist(rng);
  detail::normalize_grad(model, u, p);

  int used = 0;
  const double lambda =
      detail::inverse_iteration(model, u, p, {}, 0.0, std::min(400, max_iterations), 1e-12, used);

  const int polish_budget = std::max(1, std::min(200, max_iterations - used));
  detail::PolishResult polish = detail::polish_eigenpair(model, u, lambda, p, tol, polish_budget);
  if (!polish.converged)
    throw SolverFailure("first eigenpair polish did not reach tolerance", polish.residual,
                        used + polish.iterations);
  detail::canonical_sign(polish.u);
  EigenPair pair;
  pair.value = polish.lambda;
  pair.function = std::move(polish.u);
  pair.residual = polish.residual;
  return pair;
}

/// Sequence of m pairs at exponent p, obtained by marching the exponent from
/// 2 in bounded steps. Each step re-solves every branch with lower branches
/// deflated by a growing quadratic penalty on the value-kernel pairings, then
/// polishes without the penalty. The first branch is cross-checked against
/// the direct first-pair solver and replaced when that finds a lower value.
inline EigenSequence eigs_continuation(const SimplicialMesh& mesh, double p, int m,
                                       unsigned seed = 20240101u, double step = 0.25,
                                       double polish_tol = 1e-6) {
  if (p <= 1.0) throw std::invalid_argument("exponent must exceed one");
  if (step <= 0.0) throw std::invalid_argument("continuation step must be positive");
  EigenSequence seq = eigs_linear_p2(mesh, m, 1e-10, seed);
  seq.method = "continuation";
  if (p == 2.0) return seq;

  EnergyModel model(mesh);
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(p - 2.0) / step)));
  for (int s = 1; s <= steps; ++s) {
    const double pk = 2.0 + (p - 2.0) * static_cast<double>(s) / steps;
    std::vector<EigenPair> next;
    next.reserve(m);
    for (int i = 0; i < m; ++i) {
      const std::string where =
          "continuation step " + std::to_string(s) + " pair " + std::to_string(i);
      FemFunction u = seq.pairs[i].function;
      detail::normalize_grad(model, u, pk);

      std::vector<Eigen::VectorXd> penalties;
      penalties.reserve(i);
      for (int j = 0; j < i; ++j)
        penalties.push_back(model.op_value_power(next[j].function, pk));

      int used = 0;
      double lambda = rayleigh(model, u, pk);
      if (penalties.empty()) {
        lambda = detail::inverse_iteration(model, u, pk, {}, 0.0, 30, 1e-10, used);
      } else {
        double mu = 1e4 * std::max(1.0, seq.pairs[i].value);
        bool deflated = false;
        double worst_pairing = 0.0;
        for (int escalation = 0; escalation < 12; ++escalation) {
          lambda = detail::inverse_iteration(model, u, pk, penalties, mu, 30, 1e-10, used);
          worst_pairing = 0.0;
          for (const Eigen::VectorXd& b : penalties)
            worst_pairing = std::max(worst_pairing, std::abs(b.dot(u.coefficients)));
          if (worst_pairing < 1e-8) {
            deflated = true;
            break;
          }
          mu *= 10.0;
        }
        if (!deflated)
          throw SolverFailure(where + ": deflation penalty could not separate the branch",
                              worst_pairing, used);
      }

      detail::PolishResult polish = detail::polish_eigenpair(model, u, lambda, pk, polish_tol, 200);
      if (!polish.converged)
        throw SolverFailure(where + ": polish did not reach tolerance", polish.residual,
                            used + polish.iterations);
      for (int j = 0; j < i; ++j) {
        FemFunction flipped;
        flipped.mesh = &mesh;
        flipped.coefficients = -next[j].function.coefficients;
        const double dist = std::min(
            model.value_power_distance(polish.u, next[j].function, pk),
            model.value_power_distance(polish.u, flipped, pk));
        if (dist < 1e-3)
          throw SolverFailure(where + ": branch collapsed onto pair " + std::to_string(j), dist,
                              used + polish.iterations);
      }
      detail::canonical_sign(polish.u);
      EigenPair pair;
      pair.value = polish.lambda;
      pair.function = std::move(polish.u);
      pair.residual = polish.residual;
      next.push_back(std::move(pair));
    }
    seq.pairs = std::move(next);
  }

  EigenPair first = first_eigen_p(mesh, p, seed);
  std::sort(seq.pairs.begin(), seq.pairs.end(),
            [](const EigenPair& a, const EigenPair& b) { return a.value < b.value; });
  if (first.value < seq.pairs.front().value * (1.0 - 1e-9)) seq.pairs.front() = std::move(first);

  seq.p = p;
  return seq;
}

}  // namespace plcrit

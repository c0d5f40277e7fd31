#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace plcrit {

struct ConvexNewtonResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Damped Newton descent for a smooth convex objective. The Hessian solve
/// falls back to increasing Tikhonov shifts if the factorization rejects the
/// matrix (possible when the tangent degenerates on flat regions), and to
/// steepest descent if the computed direction is not a descent direction.
template <class ValueFn, class GradFn, class HessFn>
ConvexNewtonResult newton_minimize_convex(Eigen::VectorXd x, const ValueFn& value,
                                          const GradFn& gradient, const HessFn& hessian,
                                          double grad_tol, int max_iterations) {
  ConvexNewtonResult result;
  double fx = value(x);
  for (int iter = 0; iter < max_iterations; ++iter) {
    Eigen::VectorXd g = gradient(x);
    result.gradient_norm = g.norm();
    if (result.gradient_norm <= grad_tol) {
      result.x = std::move(x);
      result.iterations = iter;
      result.converged = true;
      return result;
    }

    Eigen::SparseMatrix<double> H = hessian(x);
    Eigen::VectorXd d;
    double shift = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::SparseMatrix<double> Hs = H;
      if (shift > 0.0) {
        Eigen::SparseMatrix<double> eye(H.rows(), H.cols());
        eye.setIdentity();
        Hs = H + shift * eye;
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(Hs);
      if (solver.info() == Eigen::Success) {
        d = solver.solve(-g);
        if (solver.info() == Eigen::Success && d.allFinite() && g.dot(d) < 0.0) break;
      }
      d.resize(0);
      shift = (shift == 0.0) ? 1e-10 * (1.0 + result.gradient_norm) : shift * 100.0;
    }
    if (d.size() == 0) d = -g;

    const double slope = g.dot(d);
    double t = 1.0;
    bool stepped = false;
    for (int ls = 0; ls < 48; ++ls) {
      const double ft = value(x + t * d);
      if (std::isfinite(ft) && ft <= fx + 1e-4 * t * slope) {
        x += t * d;
        fx = ft;
        stepped = true;
        break;
      }
      t *= 0.5;
    }
    if (!stepped) {
      result.x = std::move(x);
      result.iterations = iter;
      return result;
    }
  }
  result.x = std::move(x);
  result.iterations = max_iterations;
  return result;
}

}  // namespace plcrit

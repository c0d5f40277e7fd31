#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "plcrit/common.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/nonlinear.hpp"
#include "plcrit/params.hpp"
#include "plcrit/quadrature.hpp"

namespace plcrit {

/// Piecewise-linear function with homogeneous boundary values. Coefficients
/// are indexed by interior degree of freedom (mesh.dof_of_vertex).
struct FemFunction {
  const SimplicialMesh* mesh = nullptr;
  Eigen::VectorXd coefficients;
};

inline FemFunction zero_function(const SimplicialMesh& mesh) {
  FemFunction u;
  u.mesh = &mesh;
  u.coefficients = Eigen::VectorXd::Zero(mesh.interior_count());
  return u;
}

struct EnergyReport {
  double I_p = 0.0;
  double J_p = 0.0;
  double F = 0.0;
  double G = 0.0;
  double H = 0.0;
  double E = 0.0;
  double grad_dual_norm = 0.0;
  double lambda = 0.0;
  Model model = Model::p_only;
};

struct OperatorPairings {
  double a_p = 0.0;  // <A_p u, v>
  double b_p = 0.0;  // <B_p u, v>
  double f = 0.0;    // <f(u), v>, gradient q-term (zero for the single-exponent model)
  double g = 0.0;    // <g(u), v>, subcritical power
  double h = 0.0;    // <h(u), v>, critical power
};

/// Signed surpluses of the three norm inequalities used by the threshold
/// formulas; each is satisfied-side minus bounding-side, so nonnegative up to
/// roundoff on a consistent mesh/params pair.
struct HolderAudit {
  double slack_grad_bound = 0.0;
  double slack_sub_bound = 0.0;
  double slack_crit_bound = 0.0;
};

namespace detail {

/// |x|^e with an exact-multiplication fast path for small integer exponents.
inline double power_abs(double x, double e) {
  const double m = std::abs(x);
  const int ie = static_cast<int>(e);
  if (e == static_cast<double>(ie) && ie >= 0 && ie <= 8) {
    double out = 1.0;
    double base = m;
    int k = ie;
    while (k != 0) {
      if (k & 1) out *= base;
      base *= base;
      k >>= 1;
    }
    return out;
  }
  return std::pow(m, e);
}

/// sign(x) * |x|^{e-1}, the derivative kernel of |x|^e / e. Continuous for
/// e > 1, so no smoothing is needed on value terms.
inline double signed_power(double x, double e) {
  if (x == 0.0) return 0.0;
  return std::copysign(power_abs(x, e - 1.0), x);
}

}  // namespace detail

/// Cell-local geometry plus quadrature, shared by every assembly routine.
/// Instances are cheap relative to solves and hold lazy stiffness / mass
/// factorizations, so each solver should own one and reuse it.
class EnergyModel {
 public:
  explicit EnergyModel(const SimplicialMesh& mesh, int threads = 1,
                       double regularization = 1e-8)
      : mesh_(&mesh),
        threads_(threads < 1 ? 1 : threads),
        regularization_(regularization),
        rule_(simplex_rule(mesh.dimension)) {
    if (regularization <= 0.0) throw std::invalid_argument("regularization must be positive");
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    const int ncells = mesh_->cell_count();
    volumes_.resize(ncells);
    grads_.resize(static_cast<std::size_t>(ncells) * nloc * dim);
    Eigen::MatrixXd edges(dim, dim);
    for (int c = 0; c < ncells; ++c) {
      const int* cell = mesh_->cell(c);
      const double* v0 = mesh_->vertex(cell[0]);
      for (int j = 0; j < dim; ++j) {
        const double* vj = mesh_->vertex(cell[j + 1]);
        for (int k = 0; k < dim; ++k) edges(k, j) = vj[k] - v0[k];
      }
      volumes_[c] = cell_volume(*mesh_, c);
      const Eigen::MatrixXd inv_t = edges.inverse().transpose();
      double* g = grads_.data() + static_cast<std::size_t>(c) * nloc * dim;
      for (int k = 0; k < dim; ++k) g[k] = 0.0;
      for (int j = 0; j < dim; ++j) {
        for (int k = 0; k < dim; ++k) {
          const double val = inv_t(k, j);
          g[(j + 1) * dim + k] = val;
          g[k] -= val;
        }
      }
    }
    // Quadrature weights rescaled so that sum_q w[q] = 1 on every cell.
    scaled_weights_.resize(rule_.size());
    double factorial = 1.0;
    for (int k = 2; k <= dim; ++k) factorial *= k;
    for (int q = 0; q < rule_.size(); ++q) scaled_weights_[q] = rule_.weights[q] * factorial;
  }

  const SimplicialMesh& mesh() const { return *mesh_; }
  int threads() const { return threads_; }
  void set_threads(int threads) { threads_ = threads < 1 ? 1 : threads; }
  double regularization() const { return regularization_; }

  double domain_volume() const {
    double vol = 0.0;
    for (double v : volumes_) vol += v;
    return vol;
  }

  EnergyReport potentials(const FemFunction& u, const ProblemParams& params) const {
    check_function(u, params);
    const bool with_q = params.has_q();
    const double p = params.p;
    const double q = with_q ? *params.q : 0.0;
    const double r = params.r;
    const double ps = params.p_star();

    struct Acc {
      double ip = 0.0, jp = 0.0, f = 0.0, g = 0.0, h = 0.0;
      void merge(const Acc& o) {
        ip += o.ip;
        jp += o.jp;
        f += o.f;
        g += o.g;
        h += o.h;
      }
    };
    const Acc total = reduce_cells<Acc>([&](int c, Acc& acc) {
      CellState s;
      load_cell(u, c, s);
      const double vol = volumes_[c];
      const double m = grad_norm(s);
      acc.ip += vol * detail::power_abs(m, p) / p;
      if (with_q) acc.f += vol * detail::power_abs(m, q) / q;
      for (int k = 0; k < rule_.size(); ++k) {
        const double w = vol * scaled_weights_[k];
        const double uq = value_at(s, k);
        acc.jp += w * detail::power_abs(uq, p) / p;
        acc.g += w * detail::power_abs(uq, r) / r;
        acc.h += w * detail::power_abs(uq, ps) / ps;
      }
    });

    EnergyReport report;
    report.I_p = total.ip;
    report.J_p = total.jp;
    report.F = total.f;
    report.G = total.g;
    report.H = total.h;
    report.lambda = params.lambda.value_or(0.0);
    report.model = params.model();
    report.E = report.I_p + report.F - report.lambda * report.G - report.H;
    return report;
  }

  OperatorPairings pairings(const FemFunction& u, const FemFunction& v,
                            const ProblemParams& params) const {
    check_function(u, params);
    check_function(v, params);
    const bool with_q = params.has_q();
    const double p = params.p;
    const double q = with_q ? *params.q : 0.0;
    const double r = params.r;
    const double ps = params.p_star();

    OperatorPairings out;
    const int ncells = mesh_->cell_count();
    for (int c = 0; c < ncells; ++c) {
      CellState su, sv;
      load_cell(u, c, su);
      load_cell(v, c, sv);
      const double vol = volumes_[c];
      const double m = grad_norm(su);
      double dot = 0.0;
      for (int k = 0; k < mesh_->dimension; ++k) dot += su.grad[k] * sv.grad[k];
      out.a_p += vol * grad_kernel(m, p) * dot;
      if (with_q) out.f += vol * grad_kernel(m, q) * dot;
      for (int k = 0; k < rule_.size(); ++k) {
        const double w = vol * scaled_weights_[k];
        const double uq = value_at(su, k);
        const double vq = value_at(sv, k);
        out.b_p += w * detail::signed_power(uq, p) * vq;
        out.g += w * detail::signed_power(uq, r) * vq;
        out.h += w * detail::signed_power(uq, ps) * vq;
      }
    }
    return out;
  }

  /// Coefficient vector of v -> <A_e u, v> for the gradient power e.
  Eigen::VectorXd op_grad_power(const FemFunction& u, double e) const {
    check_mesh(u);
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    return reduce_vector([&](int c, Eigen::VectorXd& acc) {
      CellState s;
      load_cell(u, c, s);
      const double coeff = volumes_[c] * grad_kernel(grad_norm(s), e);
      if (coeff == 0.0) return;
      const int* cell = mesh_->cell(c);
      const double* g = grads_.data() + static_cast<std::size_t>(c) * nloc * dim;
      for (int j = 0; j < nloc; ++j) {
        const int dof = mesh_->dof_of_vertex[cell[j]];
        if (dof < 0) continue;
        double dot = 0.0;
        for (int k = 0; k < dim; ++k) dot += s.grad[k] * g[j * dim + k];
        acc[dof] += coeff * dot;
      }
    });
  }

  /// Coefficient vector of v -> <|u|^{e-2} u, v>.
  Eigen::VectorXd op_value_power(const FemFunction& u, double e) const {
    check_mesh(u);
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    return reduce_vector([&](int c, Eigen::VectorXd& acc) {
      CellState s;
      load_cell(u, c, s);
      const double vol = volumes_[c];
      const int* cell = mesh_->cell(c);
      for (int k = 0; k < rule_.size(); ++k) {
        const double w = vol * scaled_weights_[k];
        const double su = detail::signed_power(value_at(s, k), e);
        if (su == 0.0) continue;
        const double* bary = rule_.point(k);
        for (int j = 0; j < nloc; ++j) {
          const int dof = mesh_->dof_of_vertex[cell[j]];
          if (dof < 0) continue;
          acc[dof] += w * su * bary[j];
        }
      }
    });
  }

  /// Coefficient vector of the energy derivative v -> E'(u)[v].
  Eigen::VectorXd gradient(const FemFunction& u, const ProblemParams& params) const {
    check_function(u, params);
    if (!params.lambda) throw std::invalid_argument("energy gradient requires lambda");
    Eigen::VectorXd out = op_grad_power(u, params.p);
    if (params.has_q()) out += op_grad_power(u, *params.q);
    out -= *params.lambda * op_value_power(u, params.r);
    out -= op_value_power(u, params.p_star());
    return out;
  }

  EnergyReport energy(const FemFunction& u, const ProblemParams& params) const {
    if (!params.lambda) throw std::invalid_argument("energy requires lambda");
    EnergyReport report = potentials(u, params);
    report.grad_dual_norm = dual_norm(gradient(u, params), params.p);
    return report;
  }

  HolderAudit holder_audit(const FemFunction& u, const ProblemParams& params) const {
    check_function(u, params);
    const double vol = domain_volume();
    if (std::abs(vol - params.volume) > 1e-9 * (1.0 + std::abs(params.volume)))
      throw std::invalid_argument("params.volume disagrees with the mesh volume");
    const EnergyReport rep = potentials(u, params);
    const double p = params.p;
    const double r = params.r;
    const double ps = params.p_star();
    HolderAudit audit;
    if (params.has_q()) {
      const double q = *params.q;
      const double alpha = std::pow(vol, 1.0 - q / p);
      audit.slack_grad_bound = (alpha / q) * detail::power_abs(p * rep.I_p, q / p) - rep.F;
    }
    const double beta = std::pow(vol, 1.0 - r / p);
    const double gamma = std::pow(vol, -p / (params.dimension - p));
    audit.slack_sub_bound = rep.G - (beta / r) * detail::power_abs(p * rep.J_p, r / p);
    audit.slack_crit_bound = rep.H - (gamma / ps) * detail::power_abs(p * rep.J_p, ps / p);
    return audit;
  }

  const Eigen::SparseMatrix<double>& stiffness() const {
    if (!stiffness_) {
      const int dim = mesh_->dimension;
      const int nloc = dim + 1;
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(mesh_->cell_count()) * nloc * nloc);
      for (int c = 0; c < mesh_->cell_count(); ++c) {
        const int* cell = mesh_->cell(c);
        const double* g = grads_.data() + static_cast<std::size_t>(c) * nloc * dim;
        for (int a = 0; a < nloc; ++a) {
          const int da = mesh_->dof_of_vertex[cell[a]];
          if (da < 0) continue;
          for (int b = 0; b < nloc; ++b) {
            const int db = mesh_->dof_of_vertex[cell[b]];
            if (db < 0) continue;
            double dot = 0.0;
            for (int k = 0; k < dim; ++k) dot += g[a * dim + k] * g[b * dim + k];
            trips.emplace_back(da, db, volumes_[c] * dot);
          }
        }
      }
      auto mat = std::make_unique<Eigen::SparseMatrix<double>>(mesh_->interior_count(),
                                                               mesh_->interior_count());
      mat->setFromTriplets(trips.begin(), trips.end());
      stiffness_ = std::move(mat);
    }
    return *stiffness_;
  }

  /// Exact P1 mass matrix: on each cell vol * (1 + delta_ij) / ((N+1)(N+2)).
  const Eigen::SparseMatrix<double>& mass() const {
    if (!mass_) {
      const int dim = mesh_->dimension;
      const int nloc = dim + 1;
      const double denom = static_cast<double>((dim + 1) * (dim + 2));
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(static_cast<std::size_t>(mesh_->cell_count()) * nloc * nloc);
      for (int c = 0; c < mesh_->cell_count(); ++c) {
        const int* cell = mesh_->cell(c);
        for (int a = 0; a < nloc; ++a) {
          const int da = mesh_->dof_of_vertex[cell[a]];
          if (da < 0) continue;
          for (int b = 0; b < nloc; ++b) {
            const int db = mesh_->dof_of_vertex[cell[b]];
            if (db < 0) continue;
            trips.emplace_back(da, db, volumes_[c] * (a == b ? 2.0 : 1.0) / denom);
          }
        }
      }
      auto mat = std::make_unique<Eigen::SparseMatrix<double>>(mesh_->interior_count(),
                                                               mesh_->interior_count());
      mat->setFromTriplets(trips.begin(), trips.end());
      mass_ = std::move(mat);
    }
    return *mass_;
  }

  Eigen::VectorXd solve_stiffness(const Eigen::VectorXd& rhs) const {
    if (!stiffness_solver_) {
      stiffness_solver_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
      stiffness_solver_->compute(stiffness());
      if (stiffness_solver_->info() != Eigen::Success)
        throw std::runtime_error("stiffness factorization failed");
    }
    return stiffness_solver_->solve(rhs);
  }

  /// Tangent of u -> A_e u. For e < 2 the kernel is smoothed with the model's
  /// regularization parameter; for e >= 2 it degenerates benignly where the
  /// gradient vanishes.
  Eigen::SparseMatrix<double> grad_power_tangent(const FemFunction& u, double e) const {
    check_mesh(u);
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh_->cell_count()) * nloc * nloc);
    std::vector<double> proj(nloc);
    for (int c = 0; c < mesh_->cell_count(); ++c) {
      CellState s;
      load_cell(u, c, s);
      const double m = grad_norm(s);
      double c1;
      double c2;  // coefficient of the rank-one (unit direction) part
      if (e < 2.0) {
        const double s2 = m * m + regularization_ * regularization_;
        c1 = std::pow(s2, 0.5 * e - 1.0);
        c2 = (e - 2.0) * c1 * (m * m / s2);
      } else {
        c1 = grad_kernel(m, e);
        c2 = (e - 2.0) * c1;
      }
      const int* cell = mesh_->cell(c);
      const double* g = grads_.data() + static_cast<std::size_t>(c) * nloc * dim;
      double dir[4] = {0.0, 0.0, 0.0, 0.0};
      if (m > 0.0)
        for (int k = 0; k < dim; ++k) dir[k] = s.grad[k] / m;
      for (int j = 0; j < nloc; ++j) {
        double dot = 0.0;
        for (int k = 0; k < dim; ++k) dot += dir[k] * g[j * dim + k];
        proj[j] = dot;
      }
      const double vol = volumes_[c];
      for (int a = 0; a < nloc; ++a) {
        const int da = mesh_->dof_of_vertex[cell[a]];
        if (da < 0) continue;
        for (int b = 0; b < nloc; ++b) {
          const int db = mesh_->dof_of_vertex[cell[b]];
          if (db < 0) continue;
          double dot = 0.0;
          for (int k = 0; k < dim; ++k) dot += g[a * dim + k] * g[b * dim + k];
          trips.emplace_back(da, db, vol * (c1 * dot + c2 * proj[a] * proj[b]));
        }
      }
    }
    Eigen::SparseMatrix<double> mat(mesh_->interior_count(), mesh_->interior_count());
    mat.setFromTriplets(trips.begin(), trips.end());
    return mat;
  }

  /// Tangent of u -> |u|^{e-2} u paired against P1 basis functions.
  Eigen::SparseMatrix<double> value_power_tangent(const FemFunction& u, double e) const {
    check_mesh(u);
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mesh_->cell_count()) * nloc * nloc);
    for (int c = 0; c < mesh_->cell_count(); ++c) {
      CellState s;
      load_cell(u, c, s);
      const double vol = volumes_[c];
      const int* cell = mesh_->cell(c);
      for (int k = 0; k < rule_.size(); ++k) {
        const double uq = value_at(s, k);
        if (uq == 0.0 && e < 2.0) continue;
        const double w = vol * scaled_weights_[k] * (e - 1.0) * detail::power_abs(uq, e - 2.0);
        if (w == 0.0) continue;
        const double* bary = rule_.point(k);
        for (int a = 0; a < nloc; ++a) {
          const int da = mesh_->dof_of_vertex[cell[a]];
          if (da < 0) continue;
          for (int b = 0; b < nloc; ++b) {
            const int db = mesh_->dof_of_vertex[cell[b]];
            if (db < 0) continue;
            trips.emplace_back(da, db, w * bary[a] * bary[b]);
          }
        }
      }
    }
    Eigen::SparseMatrix<double> mat(mesh_->interior_count(), mesh_->interior_count());
    mat.setFromTriplets(trips.begin(), trips.end());
    return mat;
  }

  Eigen::SparseMatrix<double> energy_hessian(const FemFunction& u,
                                             const ProblemParams& params) const {
    check_function(u, params);
    if (!params.lambda) throw std::invalid_argument("energy hessian requires lambda");
    Eigen::SparseMatrix<double> H = grad_power_tangent(u, params.p);
    if (params.has_q()) H += grad_power_tangent(u, *params.q);
    H -= *params.lambda * value_power_tangent(u, params.r);
    H -= value_power_tangent(u, params.p_star());
    return H;
  }

  /// Minimizer of the convex auxiliary problem A_e v = g. The e = 2 case is
  /// a single cached stiffness solve; otherwise a damped Newton descent with
  /// a tiny stiffness shift against degenerate tangents (e > 2, flat cells).
  Eigen::VectorXd solve_grad_power(const Eigen::VectorXd& functional, double e) const {
    if (functional.size() != mesh_->interior_count())
      throw std::invalid_argument("functional size does not match interior dof count");
    if (functional.size() == 0 || functional.norm() == 0.0)
      return Eigen::VectorXd::Zero(functional.size());
    if (e == 2.0) return solve_stiffness(functional);

    Eigen::VectorXd x0 = solve_stiffness(functional);
    {
      // Optimal radial rescaling of the seed for the auxiliary objective.
      FemFunction v;
      v.mesh = mesh_;
      v.coefficients = x0;
      const double pip = grad_energy_value(v, e) * e;
      const double pair = functional.dot(x0);
      if (pip > 0.0 && pair > 0.0) x0 *= std::pow(pair / pip, 1.0 / (e - 1.0));
    }

    auto value = [&](const Eigen::VectorXd& x) {
      FemFunction w;
      w.mesh = mesh_;
      w.coefficients = x;
      return grad_energy_value(w, e) - functional.dot(x);
    };
    auto grad = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      FemFunction w;
      w.mesh = mesh_;
      w.coefficients = x;
      return op_grad_power(w, e) - functional;
    };
    auto hess = [&](const Eigen::VectorXd& x) -> Eigen::SparseMatrix<double> {
      FemFunction w;
      w.mesh = mesh_;
      w.coefficients = x;
      Eigen::SparseMatrix<double> H = grad_power_tangent(w, e);
      return H + 1e-12 * stiffness();
    };
    const ConvexNewtonResult res =
        newton_minimize_convex(std::move(x0), value, grad, hess, 1e-10 * functional.norm(), 60);
    return res.x;
  }

  /// Dual norm of a coefficient functional with respect to the W^{1,e}_0
  /// norm. For e = 2 this is the exact (K^{-1}-weighted) norm; otherwise the
  /// maximizing direction is found by convex minimization.
  double dual_norm(const Eigen::VectorXd& functional, double e) const {
    if (functional.size() != mesh_->interior_count())
      throw std::invalid_argument("functional size does not match interior dof count");
    if (functional.size() == 0 || functional.norm() == 0.0) return 0.0;
    if (e == 2.0) {
      const Eigen::VectorXd z = solve_stiffness(functional);
      return std::sqrt(std::max(0.0, functional.dot(z)));
    }
    const Eigen::VectorXd v = solve_grad_power(functional, e);
    const double pair = functional.dot(v);
    return detail::power_abs(std::max(pair, 0.0), (e - 1.0) / e);
  }

  /// Energy whose derivative is exactly op_grad_power(., e): the plain
  /// e-Dirichlet integral for e >= 2, its smoothed variant below 2.
  double grad_energy_value(const FemFunction& u, double e) const {
    double acc = 0.0;
    for (int c = 0; c < mesh_->cell_count(); ++c) {
      CellState s;
      load_cell(u, c, s);
      const double m = grad_norm(s);
      if (e < 2.0)
        acc += volumes_[c] * std::pow(m * m + regularization_ * regularization_, 0.5 * e);
      else
        acc += volumes_[c] * detail::power_abs(m, e);
    }
    return acc / e;
  }

  /// (e J_e(u))^{1/e}.
  double value_norm_w(const FemFunction& u, double e) const {
    check_mesh(u);
    double acc = 0.0;
    for (int c = 0; c < mesh_->cell_count(); ++c) {
      CellState s;
      load_cell(u, c, s);
      for (int k = 0; k < rule_.size(); ++k)
        acc += volumes_[c] * scaled_weights_[k] * detail::power_abs(value_at(s, k), e);
    }
    return detail::power_abs(acc, 1.0 / e);
  }

  /// (e J_e(u - v))^{1/e}: the metric used for distinctness of solutions.
  double value_power_distance(const FemFunction& u, const FemFunction& v, double e) const {
    check_mesh(u);
    check_mesh(v);
    FemFunction d;
    d.mesh = mesh_;
    d.coefficients = u.coefficients - v.coefficients;
    return value_norm_w(d, e);
  }

  /// (e I_e(u))^{1/e}: the gradient norm used for sphere radii.
  double grad_norm_w(const FemFunction& u, double e) const {
    check_mesh(u);
    double acc = 0.0;
    for (int c = 0; c < mesh_->cell_count(); ++c) {
      CellState s;
      load_cell(u, c, s);
      acc += volumes_[c] * detail::power_abs(grad_norm(s), e);
    }
    return detail::power_abs(acc, 1.0 / e);
  }

 private:
  struct CellState {
    double values[5];
    double grad[4];
    int nloc = 0;
  };

  void check_mesh(const FemFunction& u) const {
    if (u.mesh != mesh_) throw std::invalid_argument("function mesh does not match model mesh");
    if (u.coefficients.size() != mesh_->interior_count())
      throw std::invalid_argument("coefficient count does not match interior dof count");
  }

  void check_function(const FemFunction& u, const ProblemParams& params) const {
    params.validate();
    if (params.dimension != mesh_->dimension)
      throw std::invalid_argument("params dimension does not match mesh dimension");
    check_mesh(u);
  }

  void load_cell(const FemFunction& u, int c, CellState& s) const {
    const int dim = mesh_->dimension;
    const int nloc = dim + 1;
    s.nloc = nloc;
    const int* cell = mesh_->cell(c);
    const double* g = grads_.data() + static_cast<std::size_t>(c) * nloc * dim;
    for (int k = 0; k < dim; ++k) s.grad[k] = 0.0;
    for (int j = 0; j < nloc; ++j) {
      const int dof = mesh_->dof_of_vertex[cell[j]];
      const double coeff = dof < 0 ? 0.0 : u.coefficients[dof];
      s.values[j] = coeff;
      if (coeff != 0.0)
        for (int k = 0; k < dim; ++k) s.grad[k] += coeff * g[j * dim + k];
    }
  }

  double grad_norm(const CellState& s) const {
    double acc = 0.0;
    for (int k = 0; k < mesh_->dimension; ++k) acc += s.grad[k] * s.grad[k];
    return std::sqrt(acc);
  }

  double value_at(const CellState& s, int q) const {
    const double* bary = rule_.point(q);
    double acc = 0.0;
    for (int j = 0; j < s.nloc; ++j) acc += bary[j] * s.values[j];
    return acc;
  }

  /// Pointwise kernel of A_e: |grad|^{e-2}, smoothed below e = 2.
  double grad_kernel(double m, double e) const {
    if (e == 2.0) return 1.0;
    if (e < 2.0) return std::pow(m * m + regularization_ * regularization_, 0.5 * e - 1.0);
    if (m == 0.0) return 0.0;
    return detail::power_abs(m, e - 2.0);
  }

  template <class Acc, class Body>
  Acc reduce_cells(const Body& body) const {
    const int ncells = mesh_->cell_count();
    if (threads_ <= 1 || ncells < 256) {
      Acc acc{};
      for (int c = 0; c < ncells; ++c) body(c, acc);
      return acc;
    }
    const int nthreads = std::min<int>(threads_, std::max(1, ncells / 64));
    std::vector<Acc> parts(nthreads);
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(ncells) * t / nthreads);
      const int end = static_cast<int>(static_cast<long long>(ncells) * (t + 1) / nthreads);
      workers.emplace_back([&, begin, end, t] {
        Acc local{};
        for (int c = begin; c < end; ++c) body(c, local);
        parts[t] = local;
      });
    }
    for (auto& w : workers) w.join();
    // Fixed-order merge keeps the reduction deterministic for a given thread
    // count; a single thread reproduces the sequential sum bit for bit.
    Acc total{};
    for (const Acc& part : parts) total.merge(part);
    return total;
  }

  template <class Body>
  Eigen::VectorXd reduce_vector(const Body& body) const {
    const int ncells = mesh_->cell_count();
    const int ndofs = mesh_->interior_count();
    if (threads_ <= 1 || ncells < 256) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(ndofs);
      for (int c = 0; c < ncells; ++c) body(c, acc);
      return acc;
    }
    const int nthreads = std::min<int>(threads_, std::max(1, ncells / 64));
    std::vector<Eigen::VectorXd> parts(nthreads, Eigen::VectorXd::Zero(ndofs));
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(ncells) * t / nthreads);
      const int end = static_cast<int>(static_cast<long long>(ncells) * (t + 1) / nthreads);
      workers.emplace_back([&, begin, end, t] {
        for (int c = begin; c < end; ++c) body(c, parts[t]);
      });
    }
    for (auto& w : workers) w.join();
    Eigen::VectorXd total = Eigen::VectorXd::Zero(ndofs);
    for (const Eigen::VectorXd& part : parts) total += part;
    return total;
  }

  const SimplicialMesh* mesh_;
  int threads_;
  double regularization_;
  QuadratureRule rule_;
  std::vector<double> volumes_;
  std::vector<double> grads_;
  std::vector<double> scaled_weights_;
  mutable std::unique_ptr<Eigen::SparseMatrix<double>> stiffness_;
  mutable std::unique_ptr<Eigen::SparseMatrix<double>> mass_;
  mutable std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> stiffness_solver_;
};

inline EnergyReport assemble_potentials(const FemFunction& u, const ProblemParams& params) {
  return EnergyModel(*u.mesh).potentials(u, params);
}

inline OperatorPairings pair_operators(const FemFunction& u, const FemFunction& v,
                                       const ProblemParams& params) {
  return EnergyModel(*u.mesh).pairings(u, v, params);
}

inline EnergyReport energy(const FemFunction& u, const ProblemParams& params) {
  return EnergyModel(*u.mesh).energy(u, params);
}

inline HolderAudit holder_audit(const FemFunction& u, const ProblemParams& params) {
  return EnergyModel(*u.mesh).holder_audit(u, params);
}

inline void write_fem_function(const FemFunction& u, std::ostream& out) {
  if (u.mesh == nullptr) throw std::invalid_argument("function has no mesh");
  out << "MESH " << to_hex(mesh_checksum(*u.mesh)) << "\n";
  out << "DOFS " << u.coefficients.size() << "\n";
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i)
    out << format17(u.coefficients[i]) << "\n";
}

inline FemFunction read_fem_function(std::istream& in, const SimplicialMesh& mesh) {
  std::string tag;
  std::string checksum;
  if (!(in >> tag >> checksum) || tag != "MESH")
    throw std::runtime_error("malformed function file: expected MESH header");
  if (checksum != to_hex(mesh_checksum(mesh)))
    throw std::runtime_error("function file was written against a different mesh");
  long long ndofs = 0;
  if (!(in >> tag >> ndofs) || tag != "DOFS" || ndofs < 0)
    throw std::runtime_error("malformed function file: expected DOFS count");
  if (ndofs != mesh.interior_count())
    throw std::runtime_error("function file dof count does not match mesh");
  FemFunction u;
  u.mesh = &mesh;
  u.coefficients.resize(ndofs);
  for (long long i = 0; i < ndofs; ++i) {
    if (!(in >> u.coefficients[i]))
      throw std::runtime_error("malformed function file: missing coefficient");
  }
  return u;
}

}  // namespace plcrit

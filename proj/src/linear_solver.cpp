#include "xifrac/linear_solver.hpp"

#include <Eigen/SparseCholesky>

#include <stdexcept>
#include <string>

namespace xifrac {

LinearSolverKind parse_linear_solver(std::string_view name) {
  if (name == "direct") return LinearSolverKind::direct;
  if (name == "cg") return LinearSolverKind::cg;
  throw std::invalid_argument("unknown linear solver '" + std::string(name) + "'");
}

std::string_view to_string(LinearSolverKind kind) {
  return kind == LinearSolverKind::direct ? "direct" : "cg";
}

namespace {

double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  const double r = (b - a * x).norm();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace

SolveResult solve_pcg(const SparseMatrix& a, const Eigen::VectorXd& b, double tolerance, int max_iterations,
                      const Eigen::VectorXd* initial_guess) {
  const Index n = a.rows();
  SolveResult res;
  res.x = initial_guess ? *initial_guess : Eigen::VectorXd::Zero(n);

  Eigen::VectorXd inv_diag(n);
  for (Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }

  const double norm_b = b.norm();
  if (norm_b == 0.0) {
    res.x.setZero();
    res.converged = true;
    return res;
  }
  const double target = tolerance * norm_b;

  Eigen::VectorXd r = b - a * res.x;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd q(n);
  double rho = r.dot(z);
  double rnorm = r.norm();
  int it = 0;
  while (rnorm > target && it < max_iterations) {
    q.noalias() = a * p;
    const double alpha = rho / p.dot(q);
    res.x += alpha * p;
    r -= alpha * q;
    z = inv_diag.cwiseProduct(r);
    const double rho_next = r.dot(z);
    p = z + (rho_next / rho) * p;
    rho = rho_next;
    rnorm = r.norm();
    ++it;
  }
  res.iterations = it;
  // recompute rather than trust the recurrence
  res.relative_residual = relative_residual(a, res.x, b);
  res.converged = res.relative_residual <= tolerance;
  return res;
}

SolveResult solve_spd(const SparseSystem& sys, const SolverOptions& options) {
  if (sys.matrix.rows() != sys.matrix.cols() || sys.matrix.rows() != sys.rhs.size()) {
    throw std::invalid_argument("solve_spd: inconsistent system dimensions");
  }
  if (options.kind == LinearSolverKind::cg) {
    return solve_pcg(sys.matrix, sys.rhs, options.tolerance, options.max_iterations);
  }

  SolveResult res;
  const Eigen::SparseMatrix<double, Eigen::ColMajor, Index> a = sys.matrix;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, Index>> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    res.x = Eigen::VectorXd::Zero(sys.rhs.size());
    res.relative_residual = sys.rhs.norm() > 0.0 ? 1.0 : 0.0;
    res.converged = false;
    return res;
  }
  res.x = ldlt.solve(sys.rhs);
  res.iterations = 1;
  res.relative_residual = relative_residual(sys.matrix, res.x, sys.rhs);
  // one step of iterative refinement when conditioning costs us digits
  if (res.relative_residual > options.tolerance) {
    res.x += ldlt.solve(sys.rhs - sys.matrix * res.x);
    res.iterations = 2;
    res.relative_residual = relative_residual(sys.matrix, res.x, sys.rhs);
  }
  res.converged = res.relative_residual <= options.tolerance;
  return res;
}

}  // namespace xifrac

#pragma once

#include <Eigen/Core>

#include <string_view>

#include "xifrac/fem.hpp"

namespace xifrac {

enum class LinearSolverKind {
  direct,  // sparse LDL^T with fill-reducing ordering
  cg,      // conjugate gradients, Jacobi preconditioner
};

LinearSolverKind parse_linear_solver(std::string_view name);
std::string_view to_string(LinearSolverKind kind);

struct SolverOptions {
  LinearSolverKind kind = LinearSolverKind::direct;
  double tolerance = 1e-10;  // on |Ax - b|_2 / |b|_2
  int max_iterations = 20000;
};

struct SolveResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves a symmetric positive definite system. The result always carries
/// the final residual; `converged` is false when the contract
/// |Ax - b| <= tol |b| was not met.
SolveResult solve_spd(const SparseSystem& sys, const SolverOptions& options = {});

SolveResult solve_pcg(const SparseMatrix& a, const Eigen::VectorXd& b, double tolerance, int max_iterations,
                      const Eigen::VectorXd* initial_guess = nullptr);

}  // namespace xifrac

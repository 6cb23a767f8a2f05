#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "xifrac/dofs.hpp"
#include "xifrac/mesh.hpp"

namespace xifrac {

/// Tensor Gauss rule on the reference square [0,1]^2; weights sum to 1.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;

  static QuadratureRule gauss(int n_per_direction);
  std::size_t size() const { return weights.size(); }
};

/// Rule used by every assembly routine. Three points per direction integrate
/// the products of nodally-interpolated coefficients (v^2, |grad u|^2) with
/// Q1 basis products exactly.
const QuadratureRule& assembly_rule();

struct ShapeValues {
  std::array<double, 4> values{};
  /// Gradients with respect to the reference coordinates (s, t).
  std::array<std::array<double, 2>, 4> gradients{};
};

/// Bilinear basis on [0,1]^2, corners ordered counterclockwise from (0,0).
ShapeValues shape_eval(double s, double t);

/// Samples at every (cell, quadrature point), cell-major.
class QpValues {
 public:
  QpValues() = default;
  QpValues(std::size_t n_cells, std::size_t n_q, double fill = 0.0)
      : n_q_(n_q), data_(n_cells * n_q, fill) {}

  std::size_t n_q() const { return n_q_; }
  std::size_t n_cells() const { return n_q_ == 0 ? 0 : data_.size() / n_q_; }
  double operator()(std::size_t cell, std::size_t q) const { return data_[cell * n_q_ + q]; }
  double& operator()(std::size_t cell, std::size_t q) { return data_[cell * n_q_ + q]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n_q_ = 0;
  std::vector<double> data_;
};

QpValues values_at_qps(const DofMap& dofs, const ScalarField& f,
                       const QuadratureRule& rule = assembly_rule());
QpValues gradient_sq_at_qps(const DofMap& dofs, const ScalarField& f,
                            const QuadratureRule& rule = assembly_rule());
QpValues sample_at_qps(const Mesh& mesh, const std::function<double(Point)>& f,
                       const QuadratureRule& rule = assembly_rule());

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Condensed linear system. Rows of hanging dofs carry a unit diagonal and
/// a zero right-hand side; their values are recovered with
/// DofMap::distribute after the solve.
struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::map<Index, double> dirichlet;
};

/// A_ij = sum_K int_K (d grad phi_i . grad phi_j + r phi_i phi_j). Either
/// weight may be null. Diffusion weights must be strictly positive,
/// reaction weights non-negative.
SparseSystem assemble_weighted(const DofMap& dofs, const QpValues* diffusion, const QpValues* reaction);
SparseSystem assemble_weighted_laplace(const DofMap& dofs, const QpValues& weight);
SparseSystem assemble_weighted_mass(const DofMap& dofs, const QpValues& weight);
/// b_i = sum_K int_K rho phi_i, condensed onto master dofs.
Eigen::VectorXd assemble_load(const DofMap& dofs, const QpValues& density);

using DirichletValues = std::vector<std::pair<Index, double>>;

/// Symmetric elimination: known columns move to the right-hand side, the
/// row and column are cleared and the diagonal is kept, so the solve
/// returns the prescribed value exactly. Conflicting duplicates throw.
SparseSystem apply_dirichlet(SparseSystem sys, const DirichletValues& bc);

double integrate(const Mesh& mesh, const QpValues& integrand, const QuadratureRule& rule = assembly_rule());

struct RelativeError {
  double value = 0.0;
  /// Set when |a| vanished and the absolute difference was returned.
  bool absolute = false;
};

/// |a - b|_2 / |a|_2 over nodal coefficients.
RelativeError l2_relative_error(const ScalarField& a, const ScalarField& b);

}  // namespace xifrac

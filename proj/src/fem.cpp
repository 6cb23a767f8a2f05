#include "xifrac/fem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace xifrac {

namespace {

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

struct RefShapes {
  std::vector<ShapeValues> at;
};

RefShapes reference_shapes(const QuadratureRule& rule) {
  RefShapes r;
  r.at.reserve(rule.size());
  for (const auto& p : rule.points) {
    auto sh = shape_eval(p[0], p[1]);
    double sum = 0.0;
    for (double v : sh.values) sum += v;
    if (std::abs(sum - 1.0) > 1e-14) throw std::logic_error("shape functions violate partition of unity");
    r.at.push_back(sh);
  }
  return r;
}

void require_layout(const Mesh& mesh, const QpValues& w, const QuadratureRule& rule, const char* what) {
  if (w.n_q() != rule.size() || w.n_cells() != mesh.n_cells()) {
    throw std::invalid_argument(std::string(what) + ": quadrature data does not match mesh/rule");
  }
}

// Expansion of a local dof onto unconstrained global dofs.
struct Expansion {
  std::array<Index, 2> dof{};
  std::array<double, 2> weight{};
  int n = 0;
};

std::vector<Expansion> expansions(const DofMap& dofs) {
  std::vector<Expansion> e(dofs.n_dofs());
  for (std::size_t d = 0; d < e.size(); ++d) e[d] = {{static_cast<Index>(d), 0}, {1.0, 0.0}, 1};
  for (const auto& c : dofs.constraints()) {
    e[static_cast<std::size_t>(c.dof)] = {c.masters, c.weights, 2};
  }
  return e;
}

}  // namespace

QuadratureRule QuadratureRule::gauss(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be >= 1");
  std::vector<double> x, w;
  gauss_legendre_01(n, x, w);
  QuadratureRule rule;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      rule.points.push_back({x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]});
      rule.weights.push_back(w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)]);
    }
  }
  return rule;
}

const QuadratureRule& assembly_rule() {
  static const QuadratureRule rule = QuadratureRule::gauss(3);
  return rule;
}

ShapeValues shape_eval(double s, double t) {
  ShapeValues sh;
  sh.values = {(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t};
  sh.gradients = {{{-(1 - t), -(1 - s)}, {(1 - t), -s}, {t, s}, {-t, (1 - s)}}};
  return sh;
}

QpValues values_at_qps(const DofMap& dofs, const ScalarField& f, const QuadratureRule& rule) {
  require_same_mesh(dofs, f);
  const auto ref = reference_shapes(rule);
  const Mesh& mesh = dofs.mesh();
  QpValues out(mesh.n_cells(), rule.size());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cd = dofs.cell_dofs(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double v = 0.0;
      for (std::size_t k = 0; k < 4; ++k) v += ref.at[q].values[k] * f[cd[k]];
      out(c, q) = v;
    }
  }
  return out;
}

QpValues gradient_sq_at_qps(const DofMap& dofs, const ScalarField& f, const QuadratureRule& rule) {
  require_same_mesh(dofs, f);
  const auto ref = reference_shapes(rule);
  const Mesh& mesh = dofs.mesh();
  QpValues out(mesh.n_cells(), rule.size());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cd = dofs.cell_dofs(c);
    const double inv_h = 1.0 / mesh.cell_size(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        gx += ref.at[q].gradients[k][0] * f[cd[k]];
        gy += ref.at[q].gradients[k][1] * f[cd[k]];
      }
      out(c, q) = (gx * gx + gy * gy) * inv_h * inv_h;
    }
  }
  return out;
}

QpValues sample_at_qps(const Mesh& mesh, const std::function<double(Point)>& f, const QuadratureRule& rule) {
  QpValues out(mesh.n_cells(), rule.size());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const Point ll = mesh.lower_left(c);
    const double h = mesh.cell_size(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      out(c, q) = f({ll.x + h * rule.points[q][0], ll.y + h * rule.points[q][1]});
    }
  }
  return out;
}

SparseSystem assemble_weighted(const DofMap& dofs, const QpValues* diffusion, const QpValues* reaction) {
  const Mesh& mesh = dofs.mesh();
  const auto& rule = assembly_rule();
  const auto ref = reference_shapes(rule);
  if (diffusion) {
    require_layout(mesh, *diffusion, rule, "diffusion weight");
    for (double w : diffusion->data()) {
      if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("diffusion weight must be positive");
    }
  }
  if (reaction) {
    require_layout(mesh, *reaction, rule, "reaction weight");
    for (double w : reaction->data()) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("reaction weight must be non-negative");
    }
  }

  const auto exp = expansions(dofs);
  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(mesh.n_cells() * 16 * 2);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double h = mesh.cell_size(c);
    double local[4][4] = {};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& sh = ref.at[q];
      // grad phi_i . grad phi_j scales with 1/h^2, the Jacobian with h^2
      const double d = diffusion ? rule.weights[q] * (*diffusion)(c, q) : 0.0;
      const double r = reaction ? rule.weights[q] * (*reaction)(c, q) * h * h : 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          local[i][j] += d * (sh.gradients[i][0] * sh.gradients[j][0] + sh.gradients[i][1] * sh.gradients[j][1]) +
                         r * sh.values[i] * sh.values[j];
        }
      }
    }
    const auto& cd = dofs.cell_dofs(c);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& ei = exp[static_cast<std::size_t>(cd[i])];
      for (std::size_t j = 0; j < 4; ++j) {
        const auto& ej = exp[static_cast<std::size_t>(cd[j])];
        for (int a = 0; a < ei.n; ++a) {
          for (int b = 0; b < ej.n; ++b) {
            triplets.emplace_back(ei.dof[static_cast<std::size_t>(a)], ej.dof[static_cast<std::size_t>(b)],
                                  ei.weight[static_cast<std::size_t>(a)] * ej.weight[static_cast<std::size_t>(b)] *
                                      local[i][j]);
          }
        }
      }
    }
  }
  for (const auto& con : dofs.constraints()) triplets.emplace_back(con.dof, con.dof, 1.0);

  SparseSystem sys;
  const auto n = static_cast<Index>(dofs.n_dofs());
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  sys.rhs = Eigen::VectorXd::Zero(n);
  return sys;
}

SparseSystem assemble_weighted_laplace(const DofMap& dofs, const QpValues& weight) {
  return assemble_weighted(dofs, &weight, nullptr);
}

SparseSystem assemble_weighted_mass(const DofMap& dofs, const QpValues& weight) {
  return assemble_weighted(dofs, nullptr, &weight);
}

Eigen::VectorXd assemble_load(const DofMap& dofs, const QpValues& density) {
  const Mesh& mesh = dofs.mesh();
  const auto& rule = assembly_rule();
  require_layout(mesh, density, rule, "load density");
  const auto ref = reference_shapes(rule);
  const auto exp = expansions(dofs);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Index>(dofs.n_dofs()));
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double h = mesh.cell_size(c);
    std::array<double, 4> local{};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * h * h * density(c, q);
      for (std::size_t i = 0; i < 4; ++i) local[i] += w * ref.at[q].values[i];
    }
    const auto& cd = dofs.cell_dofs(c);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& e = exp[static_cast<std::size_t>(cd[i])];
      for (int a = 0; a < e.n; ++a) b[e.dof[static_cast<std::size_t>(a)]] += e.weight[static_cast<std::size_t>(a)] * local[i];
    }
  }
  return b;
}

SparseSystem apply_dirichlet(SparseSystem sys, const DirichletValues& bc) {
  const Index n = sys.matrix.rows();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  for (const auto& [node, value] : bc) {
    if (node < 0 || node >= n) throw std::out_of_range("Dirichlet node " + std::to_string(node) + " does not exist");
    auto& f = fixed[static_cast<std::size_t>(node)];
    if (f && g[static_cast<std::size_t>(node)] != value) {
      throw std::invalid_argument("conflicting Dirichlet values at node " + std::to_string(node));
    }
    f = 1;
    g[static_cast<std::size_t>(node)] = value;
    const auto [it, inserted] = sys.dirichlet.emplace(node, value);
    if (!inserted && it->second != value) {
      throw std::invalid_argument("conflicting Dirichlet values at node " + std::to_string(node));
    }
  }

  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (Index r = 0; r < n; ++r) {
    for (SparseMatrix::InnerIterator it(sys.matrix, r); it; ++it) {
      const Index c = it.col();
      if (c == r) diag[static_cast<std::size_t>(r)] = it.value();
      if (fixed[static_cast<std::size_t>(c)] && !fixed[static_cast<std::size_t>(r)]) {
        sys.rhs[r] -= it.value() * g[static_cast<std::size_t>(c)];
      }
      if ((fixed[static_cast<std::size_t>(r)] || fixed[static_cast<std::size_t>(c)]) && c != r) it.valueRef() = 0.0;
    }
  }
  for (Index r = 0; r < n; ++r) {
    if (!fixed[static_cast<std::size_t>(r)]) continue;
    double d = diag[static_cast<std::size_t>(r)];
    if (!(d > 0.0)) d = 1.0;
    sys.matrix.coeffRef(r, r) = d;
    sys.rhs[r] = d * g[static_cast<std::size_t>(r)];
  }
  sys.matrix.prune(0.0);
  sys.matrix.makeCompressed();
  return sys;
}

double integrate(const Mesh& mesh, const QpValues& integrand, const QuadratureRule& rule) {
  require_layout(mesh, integrand, rule, "integrand");
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double h = mesh.cell_size(c);
    double cell = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) cell += rule.weights[q] * integrand(c, q);
    total += cell * h * h;
  }
  return total;
}

RelativeError l2_relative_error(const ScalarField& a, const ScalarField& b) {
  if (a.mesh_id() != b.mesh_id() || a.size() != b.size()) {
    throw std::invalid_argument("l2_relative_error: fields live on different meshes");
  }
  const double diff = (a.values() - b.values()).norm();
  const double norm = a.values().norm();
  if (norm == 0.0) return {diff, true};
  return {diff / norm, false};
}

}  // namespace xifrac

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "xifrac/fem.hpp"
#include "xifrac/mesh.hpp"

namespace xifrac::testing {

inline Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

inline double asymmetry(const SparseMatrix& a) {
  const Eigen::MatrixXd d = dense(a);
  return (d - d.transpose()).cwiseAbs().maxCoeff();
}

// Rows belonging to dofs that are neither hanging nor Dirichlet carry the
// actual operator; the others are unit rows.
inline std::vector<Index> free_rows(const DofMap& dofs, const SparseSystem& sys) {
  std::vector<Index> rows;
  for (Index d = 0; d < static_cast<Index>(dofs.n_dofs()); ++d) {
    if (!dofs.is_constrained(d) && !sys.dirichlet.count(d)) rows.push_back(d);
  }
  return rows;
}

inline Eigen::MatrixXd restrict(const Eigen::MatrixXd& a, const std::vector<Index>& rows) {
  Eigen::MatrixXd r(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) r(i, j) = a(rows[i], rows[j]);
  return r;
}

// Lattice extent of a cell: [x0, x1] x [y0, y1].
inline std::array<std::int64_t, 4> extent(const CellKey& k) {
  const std::int64_t s = kLattice >> k.level;
  return {k.i * s, (k.i + 1) * s, k.j * s, (k.j + 1) * s};
}

// Exhaustive check over all cell pairs sharing a boundary segment of positive length.
inline bool brute_force_balanced(const Mesh& mesh) {
  const auto& cells = mesh.cells();
  for (std::size_t a = 0; a < cells.size(); ++a) {
    const auto ea = extent(cells[a]);
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const auto eb = extent(cells[b]);
      const bool vertical = (ea[1] == eb[0] || eb[1] == ea[0]) &&
                            std::min(ea[3], eb[3]) > std::max(ea[2], eb[2]);
      const bool horizontal = (ea[3] == eb[2] || eb[3] == ea[2]) &&
                              std::min(ea[1], eb[1]) > std::max(ea[0], eb[0]);
      if ((vertical || horizontal) && std::abs(cells[a].level - cells[b].level) > 1) return false;
    }
  }
  return true;
}

inline double area(const Mesh& mesh) {
  double s = 0.0;
  for (const auto& c : mesh.cells()) s += c.size() * c.size();
  return s;
}

// Geometric oracle: a vertex hangs when it lies strictly inside some cell edge.
// Returns vertex -> endpoints of every such edge.
inline std::map<Index, std::vector<std::array<Index, 2>>> geometric_hanging(const Mesh& mesh) {
  std::map<Index, std::vector<std::array<Index, 2>>> out;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cv = mesh.cell_vertices(c);
    for (int e = 0; e < 4; ++e) {
      const Index a = cv[e], b = cv[(e + 1) % 4];
      const auto pa = mesh.vertex_lattice(a), pb = mesh.vertex_lattice(b);
      for (Index v = 0; v < static_cast<Index>(mesh.n_vertices()); ++v) {
        const auto p = mesh.vertex_lattice(v);
        const bool on_x = pa[0] == pb[0] && p[0] == pa[0] && p[1] > std::min(pa[1], pb[1]) &&
                          p[1] < std::max(pa[1], pb[1]);
        const bool on_y = pa[1] == pb[1] && p[1] == pa[1] && p[0] > std::min(pa[0], pb[0]) &&
                          p[0] < std::max(pa[0], pb[0]);
        if (on_x || on_y) out[v].push_back({std::min(a, b), std::max(a, b)});
      }
    }
  }
  return out;
}

// Independent Q1 basis for oracles (counterclockwise corners from (0,0)).
inline double q1(int k, double s, double t) {
  const double sx = (k == 1 || k == 2) ? s : 1.0 - s;
  const double ty = (k >= 2) ? t : 1.0 - t;
  return sx * ty;
}

inline std::array<double, 2> q1_grad(int k, double s, double t) {
  const double sx = (k == 1 || k == 2) ? s : 1.0 - s;
  const double ty = (k >= 2) ? t : 1.0 - t;
  const double dsx = (k == 1 || k == 2) ? 1.0 : -1.0;
  const double dty = (k >= 2) ? 1.0 : -1.0;
  return {dsx * ty, sx * dty};
}

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace xifrac::testing

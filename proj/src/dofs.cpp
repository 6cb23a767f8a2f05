#include "xifrac/dofs.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "xifrac/fem.hpp"

namespace xifrac {

DofMap::DofMap(const Mesh& mesh, std::optional<Slit> slit) : mesh_(&mesh), slit_(slit) {
  const std::size_t nv = mesh.n_vertices();
  dof_vertex_.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) dof_vertex_[v] = static_cast<Index>(v);
  partner_.assign(nv, -1);

  std::int64_t slit_x = -1, slit_tip = 0;
  if (slit_) {
    slit_x = std::llround(slit_->x * static_cast<double>(kLattice));
    slit_tip = std::llround(slit_->y_tip * static_cast<double>(kLattice));
    if (slit_x <= 0 || slit_x >= kLattice || slit_tip < 0 || slit_tip >= kLattice) {
      throw std::invalid_argument("slit must lie inside the domain");
    }
    for (Index v = 0; v < static_cast<Index>(nv); ++v) {
      const auto p = mesh.vertex_lattice(v);
      if (p[0] == slit_x && p[1] > slit_tip) {
        partner_[static_cast<std::size_t>(v)] = static_cast<Index>(dof_vertex_.size());
        dof_vertex_.push_back(v);
      }
    }
    partner_.resize(dof_vertex_.size(), -1);
    for (std::size_t d = nv; d < dof_vertex_.size(); ++d) partner_[d] = dof_vertex_[d];
  }

  const auto cell_side_dof = [&](std::size_t c, Index v) -> Index {
    if (!slit_) return v;
    const Index copy = partner_[static_cast<std::size_t>(v)];
    if (copy < 0) return v;
    return mesh.cell_center(c).x > slit_->x ? copy : v;
  };

  cell_dofs_.resize(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    if (slit_) {
      const auto k = mesh.cell(c);
      const std::int64_t s = std::int64_t{1} << (kMaxTreeLevel - k.level);
      if (k.i * s < slit_x && (k.i + 1) * s > slit_x && (k.j + 1) * s > slit_tip) {
        throw std::invalid_argument("cell straddles the slit");
      }
    }
    const auto& cv = mesh.cell_vertices(c);
    for (std::size_t k = 0; k < 4; ++k) cell_dofs_[c][k] = cell_side_dof(c, cv[k]);
  }

  // Hanging constraints, taken from the side of the coarse cell that owns
  // the bisected edge.
  constrained_.assign(dof_vertex_.size(), 0);
  std::map<Index, DofConstraint> found;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cv = mesh.cell_vertices(c);
    for (std::size_t e = 0; e < 4; ++e) {
      const Index a = cv[e], b = cv[(e + 1) % 4];
      const auto pa = mesh.vertex_lattice(a), pb = mesh.vertex_lattice(b);
      const auto mid = mesh.find_vertex((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2);
      if (!mid) continue;
      DofConstraint dc;
      dc.dof = cell_side_dof(c, *mid);
      const Index da = cell_side_dof(c, a), db = cell_side_dof(c, b);
      dc.masters = {std::min(da, db), std::max(da, db)};
      found.emplace(dc.dof, dc);
    }
  }
  for (const auto& [dof, dc] : found) {
    constrained_[static_cast<std::size_t>(dof)] = 1;
    constraints_.push_back(dc);
  }
}

std::optional<Index> DofMap::slit_partner(Index dof) const {
  const Index p = partner_[static_cast<std::size_t>(dof)];
  if (p < 0) return std::nullopt;
  return p;
}

void DofMap::distribute(Eigen::VectorXd& values) const {
  if (static_cast<std::size_t>(values.size()) != n_dofs()) {
    throw std::invalid_argument("vector length does not match dof count");
  }
  for (const auto& c : constraints_) {
    values[c.dof] = c.weights[0] * values[c.masters[0]] + c.weights[1] * values[c.masters[1]];
  }
}

ScalarField ScalarField::constant(const DofMap& dofs, double value) {
  return ScalarField(dofs.mesh_id(), Eigen::VectorXd::Constant(static_cast<Index>(dofs.n_dofs()), value));
}

ScalarField ScalarField::interpolate(const DofMap& dofs, const std::function<double(Point)>& f) {
  Eigen::VectorXd values(static_cast<Index>(dofs.n_dofs()));
  for (Index d = 0; d < values.size(); ++d) values[d] = f(dofs.support_point(d));
  dofs.distribute(values);
  return ScalarField(dofs.mesh_id(), std::move(values));
}

void require_same_mesh(const DofMap& dofs, const ScalarField& f) {
  if (f.mesh_id() != dofs.mesh_id() || f.size() != dofs.n_dofs()) {
    throw std::invalid_argument("field was built on a different mesh");
  }
}

double evaluate_in_cell(const DofMap& dofs, const ScalarField& f, std::size_t cell, double s, double t) {
  const auto sh = shape_eval(s, t);
  const auto& cd = dofs.cell_dofs(cell);
  double value = 0.0;
  for (std::size_t k = 0; k < 4; ++k) value += sh.values[k] * f[cd[k]];
  return value;
}

double evaluate(const DofMap& dofs, const ScalarField& f, Point p) {
  require_same_mesh(dofs, f);
  const auto& mesh = dofs.mesh();
  const std::size_t c = mesh.locate(p);
  const Point ll = mesh.lower_left(c);
  const double h = mesh.cell_size(c);
  return evaluate_in_cell(dofs, f, c, (p.x - ll.x) / h, (p.y - ll.y) / h);
}

namespace {

// Reference coordinates of corner k (counterclockwise from lower-left).
constexpr std::array<std::array<double, 2>, 4> kCorners{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

}  // namespace

ScalarField transfer(const DofMap& from, const DofMap& to, const ScalarField& f) {
  require_same_mesh(from, f);
  const Mesh& old_mesh = from.mesh();
  const Mesh& new_mesh = to.mesh();

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(to.n_dofs()));
  std::vector<char> assigned(to.n_dofs(), 0);
  std::vector<std::size_t> merged;  // new cells that replaced finer old cells

  for (std::size_t c = 0; c < new_mesh.n_cells(); ++c) {
    CellKey k = new_mesh.cell(c);
    std::optional<std::size_t> host;
    int depth = 0;
    while (true) {
      host = old_mesh.find_cell(k);
      if (host || k.level == 0) break;
      k = k.parent();
      ++depth;
    }
    if (!host) {
      merged.push_back(c);
      continue;
    }
    // Corners of c expressed in the reference frame of the old host cell.
    const double ratio = 1.0 / static_cast<double>(std::int64_t{1} << depth);
    const CellKey& nk = new_mesh.cell(c);
    const std::int64_t mask = (std::int64_t{1} << depth) - 1;
    const double s0 = static_cast<double>(nk.i & mask) * ratio;
    const double t0 = static_cast<double>(nk.j & mask) * ratio;
    const auto& cd = to.cell_dofs(c);
    for (std::size_t q = 0; q < 4; ++q) {
      const Index d = cd[q];
      if (assigned[static_cast<std::size_t>(d)]) continue;
      out[d] = evaluate_in_cell(from, f, *host, s0 + ratio * kCorners[q][0], t0 + ratio * kCorners[q][1]);
      assigned[static_cast<std::size_t>(d)] = 1;
    }
  }

  if (!merged.empty()) {
    std::unordered_map<std::uint64_t, std::size_t> parent_index;
    for (std::size_t m = 0; m < merged.size(); ++m) parent_index.emplace(new_mesh.cell(merged[m]).packed(), m);
    std::vector<std::vector<std::size_t>> children(merged.size());
    for (std::size_t oc = 0; oc < old_mesh.n_cells(); ++oc) {
      CellKey k = old_mesh.cell(oc);
      while (k.level > 0) {
        k = k.parent();
        const auto it = parent_index.find(k.packed());
        if (it != parent_index.end()) {
          children[it->second].push_back(oc);
          break;
        }
      }
    }

    const auto rule = QuadratureRule::gauss(3);
    std::vector<double> sum(to.n_dofs(), 0.0);
    std::vector<int> count(to.n_dofs(), 0);
    for (std::size_t m = 0; m < merged.size(); ++m) {
      const std::size_t pc = merged[m];
      const double H = new_mesh.cell_size(pc);
      const Point pll = new_mesh.lower_left(pc);
      Eigen::Matrix4d mass;
      // exact Q1 mass matrix on a square of side H
      const double w = H * H / 36.0;
      mass << 4, 2, 1, 2, 2, 4, 2, 1, 1, 2, 4, 2, 2, 1, 2, 4;
      mass *= w;
      Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
      for (std::size_t oc : children[m]) {
        const double h = old_mesh.cell_size(oc);
        const Point ll = old_mesh.lower_left(oc);
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto [s, t] = rule.points[q];
          const double fq = evaluate_in_cell(from, f, oc, s, t);
          const double X = (ll.x + s * h - pll.x) / H;
          const double Y = (ll.y + t * h - pll.y) / H;
          const auto sh = shape_eval(X, Y);
          for (std::size_t i = 0; i < 4; ++i) rhs[static_cast<Index>(i)] += rule.weights[q] * h * h * fq * sh.values[i];
        }
      }
      const Eigen::Vector4d coef = mass.ldlt().solve(rhs);
      const auto& cd = to.cell_dofs(pc);
      for (std::size_t i = 0; i < 4; ++i) {
        sum[static_cast<std::size_t>(cd[i])] += coef[static_cast<Index>(i)];
        ++count[static_cast<std::size_t>(cd[i])];
      }
    }
    for (std::size_t d = 0; d < to.n_dofs(); ++d) {
      if (count[d] > 0) {
        out[static_cast<Index>(d)] = sum[d] / count[d];
        assigned[d] = 1;
      }
    }
  }

  to.distribute(out);
  return ScalarField(to.mesh_id(), std::move(out));
}

ScalarField transfer_field(const Mesh& old_mesh, const Mesh& new_mesh, const ScalarField& f) {
  const DofMap from(old_mesh);
  const DofMap to(new_mesh);
  return transfer(from, to, f);
}

}  // namespace xifrac

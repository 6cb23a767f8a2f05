#include "xifrac/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace xifrac {

void MaterialParams::validate() const {
  if (!(mu > 0.0)) throw std::invalid_argument("material.mu must be > 0");
  if (!(G_c > 0.0)) throw std::invalid_argument("material.G_c must be > 0");
  if (!(c_v > 0.0)) throw std::invalid_argument("material.c_v must be > 0");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("material.eta must lie in (0, 1)");
}

XiMode parse_xi_mode(std::string_view name) {
  if (name == "fixed") return XiMode::fixed;
  if (name == "global") return XiMode::global_optimal;
  if (name == "field") return XiMode::field;
  throw std::invalid_argument("unknown xi mode '" + std::string(name) + "' (fixed|global|field)");
}

std::string_view to_string(XiMode mode) {
  switch (mode) {
    case XiMode::fixed: return "fixed";
    case XiMode::global_optimal: return "global";
    case XiMode::field: return "field";
  }
  return "?";
}

void RegularizationParams::validate() const {
  if (!(zeta >= 0.0)) throw std::invalid_argument("regularization.zeta must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("regularization.alpha must be > 0");
  if (!(xi_min > 0.0 && xi_min < xi_max)) {
    throw std::invalid_argument("regularization.xi_min / regularization.xi_max: need 0 < xi_min < xi_max");
  }
  if (mode == XiMode::fixed && !(xi_fixed > 0.0)) {
    throw std::invalid_argument("regularization.xi_fixed must be > 0");
  }
  if (!(xi_refine > 0.0)) throw std::invalid_argument("regularization.xi_refine must be > 0");
}

double RegularizationParams::clamp(double xi) const { return std::clamp(xi, xi_min, xi_max); }

RegularizationState RegularizationState::uniform(XiMode mode, double value, std::size_t n_cells) {
  RegularizationState s;
  s.mode = mode;
  s.global = value;
  if (mode == XiMode::field) s.per_cell.assign(n_cells, value);
  return s;
}

double RegularizationState::min() const {
  if (mode != XiMode::field) return global;
  return per_cell.empty() ? 0.0 : *std::min_element(per_cell.begin(), per_cell.end());
}

double RegularizationState::max() const {
  if (mode != XiMode::field) return global;
  return per_cell.empty() ? 0.0 : *std::max_element(per_cell.begin(), per_cell.end());
}

double RegularizationState::mean() const {
  if (mode != XiMode::field) return global;
  if (per_cell.empty()) return 0.0;
  return std::accumulate(per_cell.begin(), per_cell.end(), 0.0) / static_cast<double>(per_cell.size());
}

std::size_t CrackMask::count() const {
  return static_cast<std::size_t>(std::count(pinned_.begin(), pinned_.end(), char{1}));
}

std::vector<Index> CrackMask::nodes() const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < pinned_.size(); ++i) {
    if (pinned_[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

double degradation(double v, double eta) { return (1.0 - eta) * v * v + eta; }

namespace {

QpValues xi_at_qps(const Mesh& mesh, const RegularizationState& xi, std::size_t n_q) {
  QpValues out(mesh.n_cells(), n_q);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double x = xi.at_cell(c);
    if (!(x > 0.0)) throw std::invalid_argument("xi must be positive");
    for (std::size_t q = 0; q < n_q; ++q) out(c, q) = x;
  }
  return out;
}

void require_cells(const Mesh& mesh, const RegularizationState& xi) {
  if (xi.mode == XiMode::field && xi.per_cell.size() != mesh.n_cells()) {
    throw std::invalid_argument("per-cell xi does not match the mesh");
  }
}

}  // namespace

SparseSystem assemble_displacement(const DofMap& u_dofs, const DofMap& v_dofs, const ScalarField& v,
                                   const MaterialParams& material, const DirichletValues& bc) {
  if (u_dofs.mesh_id() != v_dofs.mesh_id()) throw std::invalid_argument("u and v numberings differ in mesh");
  QpValues weight = values_at_qps(v_dofs, v);
  for (std::size_t c = 0; c < weight.n_cells(); ++c) {
    for (std::size_t q = 0; q < weight.n_q(); ++q) weight(c, q) = material.mu * degradation(weight(c, q), material.eta);
  }
  return apply_dirichlet(assemble_weighted_laplace(u_dofs, weight), bc);
}

SparseSystem assemble_phase(const DofMap& u_dofs, const ScalarField& u, const DofMap& v_dofs,
                            const RegularizationState& xi, const MaterialParams& material) {
  if (u_dofs.mesh_id() != v_dofs.mesh_id()) throw std::invalid_argument("u and v numberings differ in mesh");
  const Mesh& mesh = v_dofs.mesh();
  require_cells(mesh, xi);
  const auto& rule = assembly_rule();
  QpValues reaction = gradient_sq_at_qps(u_dofs, u);
  const QpValues xq = xi_at_qps(mesh, xi, rule.size());
  QpValues diffusion(mesh.n_cells(), rule.size());
  QpValues load(mesh.n_cells(), rule.size());
  const double gc = material.G_c / material.c_v;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    for (std::size_t q = 0; q < rule.size(); ++q) {
      reaction(c, q) *= material.mu * (1.0 - material.eta);
      diffusion(c, q) = 2.0 * gc * xq(c, q);
      load(c, q) = gc / xq(c, q);
    }
  }
  SparseSystem sys = assemble_weighted(v_dofs, &diffusion, &reaction);
  sys.rhs = assemble_load(v_dofs, load);
  return sys;
}

double xi_global(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                 const RegularizationParams& reg) {
  const Mesh& mesh = v_dofs.mesh();
  QpValues defect = values_at_qps(v_dofs, v);
  for (std::size_t c = 0; c < defect.n_cells(); ++c) {
    for (std::size_t q = 0; q < defect.n_q(); ++q) defect(c, q) = 1.0 - defect(c, q) + reg.zeta;
  }
  const double gc = material.G_c / material.c_v;
  const double numerator = gc * integrate(mesh, defect);
  const double grad = integrate(mesh, gradient_sq_at_qps(v_dofs, v));
  const double area = integrate(mesh, QpValues(mesh.n_cells(), assembly_rule().size(), 1.0));
  const double denominator = gc * grad + reg.alpha * area;
  return reg.clamp(std::sqrt(std::max(numerator, 0.0) / denominator));
}

double xi_pointwise(double v, std::array<double, 2> grad_v, const MaterialParams& material,
                    const RegularizationParams& reg) {
  const double gc = material.G_c / material.c_v;
  const double numerator = gc * (1.0 - v + reg.zeta);
  const double denominator = gc * (grad_v[0] * grad_v[0] + grad_v[1] * grad_v[1]) + reg.alpha;
  return reg.clamp(std::sqrt(std::max(numerator, 0.0) / denominator));
}

std::vector<double> xi_per_cell(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                                const RegularizationParams& reg) {
  require_same_mesh(v_dofs, v);
  const Mesh& mesh = v_dofs.mesh();
  const auto& rule = assembly_rule();
  std::vector<double> out(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cd = v_dofs.cell_dofs(c);
    const double inv_h = 1.0 / mesh.cell_size(c);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto sh = shape_eval(rule.points[q][0], rule.points[q][1]);
      double val = 0.0, gx = 0.0, gy = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        val += sh.values[k] * v[cd[k]];
        gx += sh.gradients[k][0] * v[cd[k]] * inv_h;
        gy += sh.gradients[k][1] * v[cd[k]] * inv_h;
      }
      sum += xi_pointwise(val, {gx, gy}, material, reg);
    }
    out[c] = sum / static_cast<double>(rule.size());
  }
  return out;
}

std::vector<double> xi_min_sampled(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                                   const RegularizationParams& reg, int sample_level) {
  require_same_mesh(v_dofs, v);
  const Mesh& mesh = v_dofs.mesh();
  std::vector<double> out(mesh.n_cells());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto& cd = v_dofs.cell_dofs(c);
    const int depth = std::max(0, sample_level - mesh.cell(c).level);
    const int n = 1 << depth;
    const double inv_h = 1.0 / mesh.cell_size(c);
    double lowest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto sh = shape_eval((i + 0.5) / n, (j + 0.5) / n);
        double val = 0.0, gx = 0.0, gy = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
          val += sh.values[k] * v[cd[k]];
          gx += sh.gradients[k][0] * inv_h * v[cd[k]];
          gy += sh.gradients[k][1] * inv_h * v[cd[k]];
        }
        lowest = std::min(lowest, xi_pointwise(val, {gx, gy}, material, reg));
      }
    }
    out[c] = lowest;
  }
  return out;
}

double calibrate_alpha(double h, double G_c, double c_v) {
  if (!(h > 0.0)) throw std::invalid_argument("calibrate_alpha: h must be > 0");
  return 3.0 * G_c / (96.0 * c_v * h * h);
}

double calibrate_zeta(double h, double c_v, double alpha, double G_c) {
  if (!(h > 0.0 && c_v > 0.0 && alpha > 0.0 && G_c > 0.0)) {
    throw std::invalid_argument("calibrate_zeta: inputs must be positive");
  }
  return 100.0 * h * h * c_v * alpha / G_c;
}

std::pair<ScalarField, CrackMask> enforce_irreversibility(const DofMap& v_dofs, const ScalarField& v_new,
                                                          const ScalarField& v_prev, const CrackMask& mask,
                                                          double crack_tol) {
  require_same_mesh(v_dofs, v_new);
  require_same_mesh(v_dofs, v_prev);
  if (mask.mesh_id() != v_dofs.mesh_id() || mask.size() != v_dofs.n_dofs()) {
    throw std::invalid_argument("crack mask lives on a different mesh");
  }
  ScalarField v = v_new;
  CrackMask out = mask;
  for (Index d = 0; d < static_cast<Index>(v.size()); ++d) {
    if (v_dofs.is_constrained(d)) continue;
    double x = std::min(std::clamp(v_new[d], 0.0, 1.0), v_prev[d]);
    if (out.contains(d) || x < crack_tol) {
      x = 0.0;
      out.insert(d);
    }
    v[d] = x;
  }
  v_dofs.distribute(v.values());
  return {std::move(v), std::move(out)};
}

CrackMask crack_set(const DofMap& v_dofs, const ScalarField& v, double crack_tol) {
  require_same_mesh(v_dofs, v);
  CrackMask mask(v_dofs.mesh_id(), v_dofs.n_dofs());
  for (Index d = 0; d < static_cast<Index>(v.size()); ++d) {
    if (v[d] <= crack_tol) mask.insert(d);
  }
  return mask;
}

EnergyRecord energies(const DofMap& u_dofs, const ScalarField& u, const DofMap& v_dofs, const ScalarField& v,
                      const RegularizationState& xi, const MaterialParams& material,
                      const RegularizationParams& reg) {
  const Mesh& mesh = v_dofs.mesh();
  require_cells(mesh, xi);
  const auto& rule = assembly_rule();
  const QpValues vq = values_at_qps(v_dofs, v);
  const QpValues gu = gradient_sq_at_qps(u_dofs, u);
  const QpValues gv = gradient_sq_at_qps(v_dofs, v);
  const double gc = material.G_c / material.c_v;

  EnergyRecord rec;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const double h2 = mesh.cell_size(c) * mesh.cell_size(c);
    const double x = xi.at_cell(c);
    double strain = 0.0, surface = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * h2;
      strain += w * degradation(vq(c, q), material.eta) * gu(c, q);
      surface += w * ((1.0 - vq(c, q)) / x + x * gv(c, q));
    }
    rec.strain += 0.5 * material.mu * strain;
    rec.surface += gc * surface;
    rec.penalty += h2 * (gc * reg.zeta / x + reg.alpha * x);
  }
  rec.total = rec.strain + rec.surface + rec.penalty;
  rec.xi_min = xi.min();
  rec.xi_max = xi.max();
  rec.xi_mean = xi.mean();
  rec.xi_global = xi.mode == XiMode::field ? 0.0 : xi.global;
  rec.cells = mesh.n_cells();
  return rec;
}

std::pair<ScalarField, CrackMask> initial_crack(const DofMap& v_dofs, double y_tip, double x_c) {
  if (!(y_tip >= 0.0 && y_tip <= 1.0 && x_c >= 0.0 && x_c <= 1.0)) {
    throw std::invalid_argument("initial crack segment must lie in the closed unit square");
  }
  const Mesh& mesh = v_dofs.mesh();
  std::vector<double> h_local(mesh.n_vertices(), 1.0);
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    for (Index vtx : mesh.cell_vertices(c)) {
      auto& h = h_local[static_cast<std::size_t>(vtx)];
      h = std::min(h, mesh.cell_size(c));
    }
  }
  ScalarField v = ScalarField::constant(v_dofs, 1.0);
  CrackMask mask(v_dofs.mesh_id(), v_dofs.n_dofs());
  if (y_tip < 1.0) {
    for (Index d = 0; d < static_cast<Index>(v_dofs.n_dofs()); ++d) {
      if (v_dofs.is_constrained(d)) continue;
      const Index vtx = v_dofs.vertex_of(d);
      const Point p = mesh.vertex(vtx);
      if (std::abs(p.x - x_c) <= 0.5 * h_local[static_cast<std::size_t>(vtx)] && p.y >= y_tip) {
        v[d] = 0.0;
        mask.insert(d);
      }
    }
  }
  v_dofs.distribute(v.values());
  return {std::move(v), std::move(mask)};
}

}  // namespace xifrac

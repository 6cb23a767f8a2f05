#include "xifrac/driver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace xifrac {

CrackModel parse_crack_model(std::string_view name) {
  if (name == "slit") return CrackModel::slit;
  if (name == "phase") return CrackModel::phase;
  throw std::invalid_argument("unknown crack model '" + std::string(name) + "' (slit|phase)");
}

std::string_view to_string(CrackModel model) { return model == CrackModel::slit ? "slit" : "phase"; }

XiUpdate parse_xi_update(std::string_view name) {
  if (name == "iteration") return XiUpdate::iteration;
  if (name == "step") return XiUpdate::step;
  throw std::invalid_argument("unknown xi update '" + std::string(name) + "' (iteration|step)");
}

std::string_view to_string(XiUpdate update) { return update == XiUpdate::iteration ? "iteration" : "step"; }

void SimConfig::validate() const {
  material.validate();
  regularization.validate();
  if (level_start < 1 || level_max > 14 || level_start > level_max) {
    throw std::invalid_argument("mesh.level_start / mesh.level_max: need 1 <= level_start <= level_max <= 14");
  }
  if (!(crack_tip_y >= 0.0 && crack_tip_y <= 1.0)) throw std::invalid_argument("crack.tip_y must lie in [0, 1]");
  if (crack_model == CrackModel::slit && crack_tip_y < 1.0) {
    const double cells = crack_tip_y * static_cast<double>(1 << level_start);
    if (std::abs(cells - std::round(cells)) > 1e-9) {
      throw std::invalid_argument("crack.tip_y must fall on a level_start grid line for a slit crack");
    }
  }
  if (!(load_rate >= 0.0)) throw std::invalid_argument("loading.rate must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("loading.dt must be > 0");
  if (steps < 0) throw std::invalid_argument("loading.steps must be >= 0");
  if (!(staggered_tol > 0.0)) throw std::invalid_argument("solver.staggered_tol must be > 0");
  if (staggered_max_iterations < 1) throw std::invalid_argument("solver.staggered_max_iterations must be >= 1");
  if (!(crack_tol > 0.0 && crack_tol < 1.0)) throw std::invalid_argument("solver.crack_tol must lie in (0, 1)");
  if (!(linear.tolerance > 0.0)) throw std::invalid_argument("solver.linear_tol must be > 0");
  if (linear.max_iterations < 1) throw std::invalid_argument("solver.linear_max_iterations must be >= 1");
  if (!(coarsen_v_tol >= 0.0)) throw std::invalid_argument("amr.coarsen_v_tol must be >= 0");
  if (output_every < 0) throw std::invalid_argument("output.every must be >= 0");
  if (profile_samples < 2) throw std::invalid_argument("output.profile_samples must be >= 2");
  for (double y : profile_ys) {
    if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("output.profile_ys must lie in [0, 1]");
  }
}

namespace {

std::optional<Slit> slit_for(const SimConfig& config) {
  if (config.crack_model != CrackModel::slit || config.crack_tip_y >= 1.0) return std::nullopt;
  return Slit{0.5, config.crack_tip_y};
}

RegularizationState compute_xi(const DofMap& v_dofs, const ScalarField& v, const SimConfig& config) {
  const auto& reg = config.regularization;
  switch (reg.mode) {
    case XiMode::fixed:
      return RegularizationState::uniform(XiMode::fixed, reg.clamp(reg.xi_fixed));
    case XiMode::global_optimal:
      return RegularizationState::uniform(XiMode::global_optimal, xi_global(v_dofs, v, config.material, reg));
    case XiMode::field: {
      RegularizationState s;
      s.mode = XiMode::field;
      s.per_cell = xi_per_cell(v_dofs, v, config.material, reg);
      return s;
    }
  }
  throw std::logic_error("unhandled xi mode");
}

ScalarField solve_displacement(const SimState& state, const ScalarField& v, const SimConfig& config,
                               int& failures) {
  const auto bc = boundary_displacement(state.u_dofs, state.t, config.load_rate);
  const auto sys = assemble_displacement(state.u_dofs, state.v_dofs, v, config.material, bc);
  auto res = solve_spd(sys, config.linear);
  if (!res.converged) ++failures;
  ScalarField u(state.mesh->id(), std::move(res.x));
  state.u_dofs.distribute(u.values());
  return u;
}

ScalarField solve_phase(const SimState& state, const ScalarField& u, const RegularizationState& xi,
                        const SimConfig& config, int& failures) {
  DirichletValues bc;
  for (Index d : state.mask.nodes()) {
    if (!state.v_dofs.is_constrained(d)) bc.emplace_back(d, 0.0);
  }
  if (bc.empty()) {
    // Without a reaction term or pinned nodes the operator is a pure Neumann
    // Laplacian with a positive source: v grows without bound and the upper
    // bound is active everywhere.
    const auto grad = gradient_sq_at_qps(state.u_dofs, u);
    const bool unloaded = std::all_of(grad.data().begin(), grad.data().end(), [](double g) { return g == 0.0; });
    if (unloaded) return state.v_prev;
  }
  const auto sys = apply_dirichlet(assemble_phase(state.u_dofs, u, state.v_dofs, xi, config.material), bc);
  auto res = solve_spd(sys, config.linear);
  if (!res.converged) ++failures;
  ScalarField v(state.mesh->id(), std::move(res.x));
  state.v_dofs.distribute(v.values());
  return v;
}

}  // namespace

SimState initial_state(const SimConfig& config) {
  config.validate();
  auto mesh = std::make_shared<const Mesh>(Mesh::uniform(config.level_start, config.level_start, config.level_max));
  DofMap u_dofs(*mesh, slit_for(config));
  DofMap v_dofs(*mesh);
  ScalarField v;
  CrackMask mask;
  if (config.crack_model == CrackModel::phase) {
    std::tie(v, mask) = initial_crack(v_dofs, config.crack_tip_y);
  } else {
    v = ScalarField::constant(v_dofs, 1.0);
    mask = CrackMask(mesh->id(), v_dofs.n_dofs());
  }
  ScalarField u = ScalarField::constant(u_dofs, 0.0);
  auto xi = compute_xi(v_dofs, v, config);
  SimState state{mesh, u_dofs, v_dofs, std::move(u), v, v, std::move(mask), std::move(xi), 0.0, 0, {}};
  return state;
}

DirichletValues boundary_displacement(const DofMap& u_dofs, double t, double rate) {
  const Mesh& mesh = u_dofs.mesh();
  const std::int64_t half = kLattice / 2;
  DirichletValues bc;
  for (Index v : boundary_nodes(mesh, Boundary::top)) {
    if (mesh.is_hanging(v)) continue;
    const auto x = mesh.vertex_lattice(v)[0];
    if (x == half) continue;
    bc.emplace_back(v, x < half ? -rate * t : rate * t);
  }
  return bc;
}

RegularizationState update_xi(const SimState& state, const SimConfig& config) {
  return compute_xi(state.v_dofs, state.v, config);
}

StaggeredReport staggered_step(SimState& state, const SimConfig& config) {
  StaggeredReport report;
  state.v_prev = state.v;
  const CrackMask mask_start = state.mask;

  ScalarField u_it = state.u;
  ScalarField v_it = state.v;
  CrackMask mask_it = mask_start;
  RegularizationState xi = state.xi;

  for (int k = 1; k <= config.staggered_max_iterations; ++k) {
    ScalarField u_new = solve_displacement(state, v_it, config, report.linear_failures);
    ScalarField v_raw = solve_phase(state, u_new, xi, config, report.linear_failures);
    auto [v_new, mask_new] = enforce_irreversibility(state.v_dofs, v_raw, state.v_prev, mask_start, config.crack_tol);

    report.err_u = l2_relative_error(u_new, u_it).value;
    report.err_v = l2_relative_error(v_new, v_it).value;
    report.iterations = k;

    u_it = std::move(u_new);
    v_it = std::move(v_new);
    mask_it = std::move(mask_new);
    if (config.xi_update == XiUpdate::iteration) xi = compute_xi(state.v_dofs, v_it, config);

    if (report.err_u < config.staggered_tol && report.err_v < config.staggered_tol) {
      report.converged = true;
      break;
    }
  }

  state.u = std::move(u_it);
  state.v = std::move(v_it);
  state.mask = std::move(mask_it);
  state.xi = config.xi_update == XiUpdate::iteration ? std::move(xi) : update_xi(state, config);
  return report;
}

std::vector<double> refinement_indicator(const SimState& state, const SimConfig& config) {
  return xi_min_sampled(state.v_dofs, state.v, config.material, config.regularization, config.level_max);
}

namespace {

bool adapt_once(SimState& state, const SimConfig& config, AmrReport& report) {
  const Mesh& mesh = *state.mesh;
  const auto indicator = refinement_indicator(state, config);
  const double threshold = config.regularization.xi_refine;

  std::vector<std::size_t> refine_flags, coarsen_flags;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const int level = mesh.cell(c).level;
    if (indicator[c] < threshold) {
      if (level < config.level_max) {
        refine_flags.push_back(c);
      } else {
        ++report.at_min_size;
      }
      continue;
    }
    if (level <= config.level_start) continue;
    const auto& cd = state.v_dofs.cell_dofs(c);
    const bool intact = std::all_of(cd.begin(), cd.end(),
                                    [&](Index d) { return state.v[d] >= 1.0 - config.coarsen_v_tol; });
    if (intact) coarsen_flags.push_back(c);
  }
  report.flagged_refine += refine_flags.size();
  if (refine_flags.empty() && coarsen_flags.empty()) return false;

  AdaptReport rr, cr;
  Mesh refined = refine(mesh, refine_flags, &rr);
  std::vector<std::size_t> mapped;
  for (std::size_t c : coarsen_flags) {
    if (auto nc = refined.find_cell(mesh.cell(c))) mapped.push_back(*nc);
  }
  Mesh adapted = coarsen(refined, mapped, &cr);
  if (adapted.cells() == mesh.cells()) return false;

  report.refined += rr.applied;
  report.closure += rr.closure;
  report.coarsened += cr.applied;

  auto new_mesh = std::make_shared<const Mesh>(std::move(adapted));
  DofMap u_dofs(*new_mesh, state.u_dofs.slit());
  DofMap v_dofs(*new_mesh);
  ScalarField u = transfer(state.u_dofs, u_dofs, state.u);
  ScalarField v = transfer(state.v_dofs, v_dofs, state.v);
  ScalarField v_prev = transfer(state.v_dofs, v_dofs, state.v_prev);

  state.mesh = new_mesh;
  state.u_dofs = u_dofs;
  state.v_dofs = v_dofs;
  state.u = std::move(u);
  state.v = std::move(v);
  state.v_prev = std::move(v_prev);
  state.mask = crack_set(state.v_dofs, state.v, config.crack_tol);
  state.xi = update_xi(state, config);
  return true;
}

}  // namespace

AmrReport amr_pass(SimState& state, const SimConfig& config) {
  AmrReport report;
  if (!config.amr_enabled) return report;
  const int max_passes = config.amr_fixed_point ? config.level_max - config.level_start + 1 : 1;
  for (int p = 0; p < max_passes; ++p) {
    if (!adapt_once(state, config, report)) break;
    report.changed = true;
    ++report.passes;
  }
  return report;
}

bool crack_reached_bottom(const SimState& state) {
  const Mesh& mesh = *state.mesh;
  for (Index d : state.mask.nodes()) {
    if (mesh.on_boundary(state.v_dofs.vertex_of(d), Boundary::bottom)) return true;
  }
  return false;
}

RunResult run(const SimConfig& config, const ProgressObserver& observer) {
  RunResult result{initial_state(config), {}, 0, false};
  SimState& state = result.final_state;
  for (int n = 0; n < config.steps; ++n) {
    state.step = n;
    state.t = n * config.dt;
    const auto rep = staggered_step(state, config);

    EnergyRecord rec = energies(state.u_dofs, state.u, state.v_dofs, state.v, state.xi, config.material,
                                config.regularization);
    rec.step = n;
    rec.t = state.t;
    rec.staggered_iterations = rep.iterations;
    rec.converged = rep.converged;
    if (!rep.converged) ++result.non_converged_steps;
    state.history.push_back(rec);
    if (observer) observer({ProgressEvent::Kind::step, &state, &state.history.back(), rep, {}});

    if (config.amr_enabled) {
      const auto amr = amr_pass(state, config);
      if (observer && amr.changed) observer({ProgressEvent::Kind::amr, &state, &state.history.back(), rep, amr});
    }
    if (crack_reached_bottom(state)) {
      result.broken = true;
      if (config.stop_when_broken) break;
    }
  }
  result.history = state.history;
  return result;
}

}  // namespace xifrac

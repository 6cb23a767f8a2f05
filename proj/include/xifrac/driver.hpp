#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "xifrac/dofs.hpp"
#include "xifrac/linear_solver.hpp"
#include "xifrac/mesh.hpp"
#include "xifrac/phasefield.hpp"

namespace xifrac {

/// How the pre-existing edge crack enters the model.
enum class CrackModel {
  slit,   // traction-free cut in the displacement space, v = 1 initially
  phase,  // v = 0 seed on the crack line, pinned through the crack mask
};

/// When xi is re-optimized inside a load step.
enum class XiUpdate {
  iteration,  // after every phase solve
  step,       // frozen during the staggered loop, refreshed after convergence
};

CrackModel parse_crack_model(std::string_view name);
std::string_view to_string(CrackModel model);
XiUpdate parse_xi_update(std::string_view name);
std::string_view to_string(XiUpdate update);

struct SimConfig {
  MaterialParams material;
  RegularizationParams regularization;
  XiUpdate xi_update = XiUpdate::iteration;

  int level_start = 7;
  int level_max = 7;
  CrackModel crack_model = CrackModel::slit;
  double crack_tip_y = 0.5;

  double load_rate = 0.4;   // c, top-boundary displacement per unit time
  double dt = 0.01;
  int steps = 100;         // N_max
  bool stop_when_broken = true;

  double staggered_tol = 1e-4;
  int staggered_max_iterations = 300;
  double crack_tol = 0.01;  // Xi_CR
  SolverOptions linear;

  bool amr_enabled = false;
  bool amr_fixed_point = false;
  double coarsen_v_tol = 1e-6;

  std::string output_dir;
  int output_every = 10;  // VTK/profile cadence in steps; 0 disables snapshots
  std::vector<double> profile_ys{0.1, 0.2, 0.3, 0.4};
  int profile_samples = 201;

  double h_min() const { return 1.0 / static_cast<double>(1 << level_max); }
  void validate() const;
};

struct SimState {
  std::shared_ptr<const Mesh> mesh;
  DofMap u_dofs;
  DofMap v_dofs;
  ScalarField u;
  ScalarField v;
  ScalarField v_prev;  // converged phase field of the previous step
  CrackMask mask;
  RegularizationState xi;
  double t = 0.0;
  int step = 0;
  std::vector<EnergyRecord> history;
};

/// Fresh state on the level_start mesh: u = 0, crack seeded per crack_model,
/// xi from the configured mode.
SimState initial_state(const SimConfig& config);

/// Dirichlet values on Gamma_3: -c t for x < 0.5, +c t for x > 0.5. The
/// crack-mouth vertex x = 0.5 and hanging vertices are left free.
DirichletValues boundary_displacement(const DofMap& u_dofs, double t, double rate);

struct StaggeredReport {
  int iterations = 0;
  bool converged = false;
  double err_u = 0.0;
  double err_v = 0.0;
  int linear_failures = 0;
};

StaggeredReport staggered_step(SimState& state, const SimConfig& config);

RegularizationState update_xi(const SimState& state, const SimConfig& config);

/// Per-cell refinement indicator: the smallest pointwise-optimal xi of the
/// current v over the cell, sampled on the level_max lattice. Being monotone
/// under refinement, it bounds the passes needed to reach an AMR fixed point
/// by level_max - level_start.
std::vector<double> refinement_indicator(const SimState& state, const SimConfig& config);

struct AmrReport {
  std::size_t flagged_refine = 0;
  std::size_t at_min_size = 0;  // below threshold but already at h_min
  std::size_t refined = 0;
  std::size_t coarsened = 0;
  std::size_t closure = 0;
  bool changed = false;
  int passes = 0;
};

/// One flag/refine/coarsen/transfer cycle (or, with amr_fixed_point, cycles
/// until the mesh stops changing).
AmrReport amr_pass(SimState& state, const SimConfig& config);

struct ProgressEvent {
  enum class Kind { step, amr };
  Kind kind = Kind::step;
  const SimState* state = nullptr;
  const EnergyRecord* record = nullptr;
  StaggeredReport staggered;
  AmrReport amr;
};

using ProgressObserver = std::function<void(const ProgressEvent&)>;

struct RunResult {
  SimState final_state;
  std::vector<EnergyRecord> history;
  int non_converged_steps = 0;
  bool broken = false;  // crack mask reached Gamma_1
};

RunResult run(const SimConfig& config, const ProgressObserver& observer = {});

/// True when any bottom-boundary node is in the crack mask.
bool crack_reached_bottom(const SimState& state);

}  // namespace xifrac

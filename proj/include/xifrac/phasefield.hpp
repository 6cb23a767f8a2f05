#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "xifrac/dofs.hpp"
#include "xifrac/fem.hpp"
#include "xifrac/mesh.hpp"

namespace xifrac {

/// Standard AT1 normalization, 4 * int_0^1 sqrt(w(s)) ds with w(s) = s.
inline constexpr double kAt1Normalization = 8.0 / 3.0;

struct MaterialParams {
  double mu = 80.8;                    // shear modulus
  double G_c = 2.7;                    // critical energy release rate
  double c_v = kAt1Normalization;      // dissipation normalization
  double eta = 1e-10;                  // residual stiffness

  void validate() const;
};

enum class XiMode {
  fixed,           // xi held at xi_fixed
  global_optimal,  // one scalar from the domain-integrated optimality condition
  field,           // per-cell value from the pointwise optimality condition
};

XiMode parse_xi_mode(std::string_view name);
std::string_view to_string(XiMode mode);

struct RegularizationParams {
  XiMode mode = XiMode::global_optimal;
  double zeta = 9.36;       // lower-bound control
  double alpha = 493.75;    // upper-bound control, enters the energy as int alpha xi
  double xi_fixed = 0.0390625;
  double xi_min = 0.011;
  double xi_max = 0.15;
  double xi_refine = 0.03;  // cells below this are refined

  void validate() const;
  double clamp(double xi) const;
};

/// xi as one scalar (fixed / global modes) or one value per active cell.
struct RegularizationState {
  XiMode mode = XiMode::global_optimal;
  double global = 0.0;
  std::vector<double> per_cell;

  static RegularizationState uniform(XiMode mode, double value, std::size_t n_cells = 0);

  double at_cell(std::size_t c) const { return mode == XiMode::field ? per_cell[c] : global; }
  double min() const;
  double max() const;
  double mean() const;
};

/// Nodes whose phase field has been pinned to zero.
class CrackMask {
 public:
  CrackMask() = default;
  CrackMask(std::uint64_t mesh_id, std::size_t n_nodes) : mesh_id_(mesh_id), pinned_(n_nodes, 0) {}

  std::uint64_t mesh_id() const { return mesh_id_; }
  std::size_t size() const { return pinned_.size(); }
  bool contains(Index node) const { return pinned_[static_cast<std::size_t>(node)] != 0; }
  void insert(Index node) { pinned_[static_cast<std::size_t>(node)] = 1; }
  std::size_t count() const;
  std::vector<Index> nodes() const;

 private:
  std::uint64_t mesh_id_ = 0;
  std::vector<char> pinned_;
};

struct EnergyRecord {
  int step = 0;
  double t = 0.0;
  double strain = 0.0;
  double surface = 0.0;  // (G_c/c_v) int (1-v)/xi + xi |grad v|^2
  double penalty = 0.0;  // (G_c/c_v) int zeta/xi + int alpha xi
  double total = 0.0;
  double xi_min = 0.0;
  double xi_max = 0.0;
  double xi_mean = 0.0;
  double xi_global = 0.0;  // zero in field mode
  std::size_t cells = 0;
  int staggered_iterations = 0;
  bool converged = true;
};

double degradation(double v, double eta);

/// Displacement system: weight mu * degradation(v), no body load, with the
/// given Dirichlet values applied.
SparseSystem assemble_displacement(const DofMap& u_dofs, const DofMap& v_dofs, const ScalarField& v,
                                   const MaterialParams& material, const DirichletValues& bc);

/// Phase system: reaction mu (1-eta) |grad u|^2, diffusion 2 G_c xi / c_v,
/// load G_c / (c_v xi). No boundary values applied.
SparseSystem assemble_phase(const DofMap& u_dofs, const ScalarField& u, const DofMap& v_dofs,
                            const RegularizationState& xi, const MaterialParams& material);

/// Optimal spatially uniform xi, clamped to [xi_min, xi_max].
double xi_global(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                 const RegularizationParams& reg);

/// Pointwise optimal xi, clamped to [xi_min, xi_max].
double xi_pointwise(double v, std::array<double, 2> grad_v, const MaterialParams& material,
                    const RegularizationParams& reg);

/// Per-cell xi: mean over the cell's quadrature points of xi_pointwise.
std::vector<double> xi_per_cell(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                                const RegularizationParams& reg);

/// Minimum of xi_pointwise over the centres of each cell's sub-cells at
/// `sample_level` (the cell centre once the cell is that fine). A child's
/// samples are a subset of its parent's, so the value can only grow under
/// refinement.
std::vector<double> xi_min_sampled(const DofMap& v_dofs, const ScalarField& v, const MaterialParams& material,
                                   const RegularizationParams& reg, int sample_level);

/// alpha = 3 G_c / (96 c_v h^2), from requiring xi = 2h where v = 0.
double calibrate_alpha(double h, double G_c, double c_v);
/// zeta = 100 h^2 c_v alpha / G_c, from requiring xi = 10h where v = 1.
double calibrate_zeta(double h, double c_v, double alpha, double G_c);

/// v <- min(clamp(v_new, 0, 1), v_prev); nodes already pinned or falling
/// below crack_tol are set to zero and added to the mask. Hanging nodes
/// follow their masters.
std::pair<ScalarField, CrackMask> enforce_irreversibility(const DofMap& v_dofs, const ScalarField& v_new,
                                                          const ScalarField& v_prev, const CrackMask& mask,
                                                          double crack_tol);

/// Nodes with v <= crack_tol.
CrackMask crack_set(const DofMap& v_dofs, const ScalarField& v, double crack_tol);

EnergyRecord energies(const DofMap& u_dofs, const ScalarField& u, const DofMap& v_dofs, const ScalarField& v,
                      const RegularizationState& xi, const MaterialParams& material,
                      const RegularizationParams& reg);

/// Phase-field crack seed along {x_c} x [y_tip, 1]: nodes within half a
/// (local) cell of the segment get v = 0 and enter the mask.
std::pair<ScalarField, CrackMask> initial_crack(const DofMap& v_dofs, double y_tip, double x_c = 0.5);

}  // namespace xifrac

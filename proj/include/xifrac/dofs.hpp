#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "xifrac/mesh.hpp"

namespace xifrac {

/// Traction-free cut {x} x (y_tip, 1]. Displacement degrees of freedom on
/// the cut are duplicated so the two faces move independently.
struct Slit {
  double x = 0.5;
  double y_tip = 0.5;
};

struct DofConstraint {
  Index dof = 0;
  std::array<Index, 2> masters{};
  std::array<double, 2> weights{0.5, 0.5};
};

/// Q1 degree-of-freedom numbering on a Mesh. Dofs [0, n_vertices) coincide
/// with vertex ids; with a slit, the copies used by cells right of the cut
/// are appended after them. The mesh must outlive the map.
class DofMap {
 public:
  explicit DofMap(const Mesh& mesh, std::optional<Slit> slit = std::nullopt);

  const Mesh& mesh() const { return *mesh_; }
  std::uint64_t mesh_id() const { return mesh_->id(); }
  std::size_t n_dofs() const { return dof_vertex_.size(); }
  const std::optional<Slit>& slit() const { return slit_; }

  const std::array<Index, 4>& cell_dofs(std::size_t c) const { return cell_dofs_[c]; }
  Index vertex_of(Index dof) const { return dof_vertex_[static_cast<std::size_t>(dof)]; }
  Point support_point(Index dof) const { return mesh_->vertex(vertex_of(dof)); }
  /// The other face's copy of a slit dof, if any.
  std::optional<Index> slit_partner(Index dof) const;

  const std::vector<DofConstraint>& constraints() const { return constraints_; }
  bool is_constrained(Index dof) const { return constrained_[static_cast<std::size_t>(dof)] != 0; }

  /// Overwrites constrained entries with their master combination.
  void distribute(Eigen::VectorXd& values) const;

 private:
  const Mesh* mesh_;
  std::optional<Slit> slit_;
  std::vector<std::array<Index, 4>> cell_dofs_;
  std::vector<Index> dof_vertex_;
  std::vector<Index> partner_;
  std::vector<DofConstraint> constraints_;
  std::vector<char> constrained_;
};

/// Nodal coefficients of a piecewise-bilinear function; tagged with the id
/// of the mesh it lives on.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(std::uint64_t mesh_id, Eigen::VectorXd values)
      : mesh_id_(mesh_id), values_(std::move(values)) {}

  static ScalarField constant(const DofMap& dofs, double value);
  /// Nodal interpolant of f, with constraints applied.
  static ScalarField interpolate(const DofMap& dofs, const std::function<double(Point)>& f);

  std::uint64_t mesh_id() const { return mesh_id_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  double operator[](Index i) const { return values_[i]; }
  double& operator[](Index i) { return values_[i]; }

 private:
  std::uint64_t mesh_id_ = 0;
  Eigen::VectorXd values_;
};

/// Throws std::invalid_argument when f does not live on `dofs`.
void require_same_mesh(const DofMap& dofs, const ScalarField& f);

/// Bilinear interpolation inside cell c at reference coordinates (s, t).
double evaluate_in_cell(const DofMap& dofs, const ScalarField& f, std::size_t cell, double s, double t);
double evaluate(const DofMap& dofs, const ScalarField& f, Point p);

/// Moves f from `from` to `to`, where `to` came out of one refine and/or
/// coarsen pass on `from`. Cells that persist or were refined receive the
/// exact interpolant; cells that were merged receive the cell-local L2
/// projection of the fine field onto the parent's bilinear space.
ScalarField transfer(const DofMap& from, const DofMap& to, const ScalarField& f);

/// Vertex-field convenience over plain (slit-free) numberings.
ScalarField transfer_field(const Mesh& old_mesh, const Mesh& new_mesh, const ScalarField& f);

}  // namespace xifrac

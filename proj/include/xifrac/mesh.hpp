#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace xifrac {

using Index = std::int64_t;

/// Finest representable quadtree level. Vertex coordinates are stored as
/// integers on the 2^kMaxTreeLevel lattice so that vertex identity is exact.
inline constexpr int kMaxTreeLevel = 20;
inline constexpr std::int64_t kLattice = std::int64_t{1} << kMaxTreeLevel;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Boundary portions of the unit square.
enum class Boundary : unsigned {
  bottom = 1u,  // Gamma_1, y = 0
  right = 2u,   // Gamma_2, x = 1
  top = 4u,     // Gamma_3, y = 1
  left = 8u,    // Gamma_4, x = 0
};

/// Quadtree cell: level l, lower-left corner (i, j) * 2^-l.
struct CellKey {
  int level = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;

  CellKey parent() const { return {level - 1, i >> 1, j >> 1}; }
  CellKey child(int k) const {
    return {level + 1, 2 * i + (k & 1), 2 * j + ((k >> 1) & 1)};
  }
  double size() const { return 1.0 / static_cast<double>(std::int64_t{1} << level); }
  std::uint64_t packed() const {
    return (static_cast<std::uint64_t>(level) << 58) |
           (static_cast<std::uint64_t>(i) << 29) | static_cast<std::uint64_t>(j);
  }
};

/// Hanging vertex slaved to the two endpoints of the coarse edge it bisects.
struct HangingConstraint {
  Index node = 0;
  std::array<Index, 2> masters{};
  std::array<double, 2> weights{0.5, 0.5};
};

/// hanging vertex id -> masters; sorted by node id.
using ConstraintSet = std::vector<HangingConstraint>;

/// 2:1-balanced quadtree over the unit square. Immutable once built; refine
/// and coarsen return new meshes with fresh ids.
class Mesh {
 public:
  Mesh(std::vector<CellKey> cells, int min_level, int max_level);

  static Mesh uniform(int level);
  static Mesh uniform(int level, int min_level, int max_level);

  std::uint64_t id() const { return id_; }
  int min_level() const { return min_level_; }
  int max_level() const { return max_level_; }

  std::size_t n_cells() const { return cells_.size(); }
  std::size_t n_vertices() const { return lattice_.size(); }

  const CellKey& cell(std::size_t c) const { return cells_[c]; }
  const std::vector<CellKey>& cells() const { return cells_; }
  double cell_size(std::size_t c) const { return cells_[c].size(); }
  Point lower_left(std::size_t c) const;
  Point cell_center(std::size_t c) const;

  /// Corners counterclockwise from the lower-left one.
  const std::array<Index, 4>& cell_vertices(std::size_t c) const { return connectivity_[c]; }

  Point vertex(Index v) const;
  std::array<std::int64_t, 2> vertex_lattice(Index v) const { return lattice_[static_cast<std::size_t>(v)]; }
  std::optional<Index> find_vertex(std::int64_t lx, std::int64_t ly) const;

  unsigned boundary_mask(Index v) const { return boundary_[static_cast<std::size_t>(v)]; }
  bool on_boundary(Index v, Boundary b) const {
    return (boundary_mask(v) & static_cast<unsigned>(b)) != 0;
  }

  std::optional<std::size_t> find_cell(const CellKey& key) const;
  /// Active cell containing p (points on shared edges resolve to the
  /// upper/right cell, except on the domain's top/right boundary).
  std::size_t locate(Point p) const;

  const ConstraintSet& constraints() const { return constraints_; }
  bool is_hanging(Index v) const { return hanging_[static_cast<std::size_t>(v)] != 0; }

 private:
  std::uint64_t id_;
  int min_level_;
  int max_level_;
  std::vector<CellKey> cells_;
  std::vector<std::array<Index, 4>> connectivity_;
  std::vector<std::array<std::int64_t, 2>> lattice_;
  std::vector<unsigned> boundary_;
  std::vector<char> hanging_;
  ConstraintSet constraints_;
  std::unordered_map<std::uint64_t, std::size_t> cell_lookup_;
  std::unordered_map<std::uint64_t, Index> vertex_lookup_;
};

struct AdaptReport {
  std::size_t requested = 0;
  std::size_t applied = 0;
  /// flagged cells that could not be processed (already at the level limit,
  /// incomplete sibling sets, balance violations)
  std::size_t skipped = 0;
  std::size_t closure = 0;  // cells refined only to restore 2:1 balance
};

/// Splits each flagged cell into 4 children and closes the result under 2:1
/// balance. Cells already at max_level are skipped and counted.
Mesh refine(const Mesh& mesh, std::span<const std::size_t> flags, AdaptReport* report = nullptr);

/// Merges sibling quadruples whose four members are all flagged, provided
/// the parent level stays >= min_level and the merge keeps the mesh balanced.
Mesh coarsen(const Mesh& mesh, std::span<const std::size_t> flags, AdaptReport* report = nullptr);

ConstraintSet hanging_constraints(const Mesh& mesh);

/// Vertices carrying tag `region` whose coordinates satisfy `predicate`.
std::vector<Index> boundary_nodes(const Mesh& mesh, Boundary region,
                                  const std::function<bool(Point)>& predicate = {});

}  // namespace xifrac

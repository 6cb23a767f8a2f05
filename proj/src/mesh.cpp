#include "xifrac/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace xifrac {

namespace {

std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

std::uint64_t pack_lattice(std::int64_t x, std::int64_t y) {
  return (static_cast<std::uint64_t>(x) << 32) | static_cast<std::uint64_t>(y);
}

std::int64_t lattice_step(int level) { return std::int64_t{1} << (kMaxTreeLevel - level); }

bool inside_domain(const CellKey& k) {
  const std::int64_t n = std::int64_t{1} << k.level;
  return k.i >= 0 && k.j >= 0 && k.i < n && k.j < n;
}

constexpr std::array<std::array<int, 2>, 4> kEdgeDirs{{{0, -1}, {1, 0}, {0, 1}, {-1, 0}}};

// Active-cell set used while adapting.
class CellSet {
 public:
  explicit CellSet(const Mesh& mesh) : min_level_(mesh.min_level()), max_level_(mesh.max_level()) {
    for (const auto& c : mesh.cells()) cells_.emplace(c.packed(), c);
  }

  bool contains(const CellKey& k) const { return cells_.count(k.packed()) != 0; }
  void erase(const CellKey& k) { cells_.erase(k.packed()); }
  void insert(const CellKey& k) { cells_.emplace(k.packed(), k); }

  /// Active cell covering the region of `k`, searching levels <= k.level.
  std::optional<CellKey> leaf_covering(CellKey k) const {
    while (k.level >= 0) {
      if (contains(k)) return k;
      if (k.level == 0) break;
      k = k.parent();
    }
    return std::nullopt;
  }

  std::vector<CellKey> keys() const {
    std::vector<CellKey> out;
    out.reserve(cells_.size());
    for (const auto& [_, k] : cells_) out.push_back(k);
    return out;
  }

  int min_level() const { return min_level_; }
  int max_level() const { return max_level_; }

 private:
  int min_level_;
  int max_level_;
  std::unordered_map<std::uint64_t, CellKey> cells_;
};

}  // namespace

Mesh::Mesh(std::vector<CellKey> cells, int min_level, int max_level)
    : id_(next_mesh_id()), min_level_(min_level), max_level_(max_level), cells_(std::move(cells)) {
  if (min_level < 0 || max_level > kMaxTreeLevel || min_level > max_level) {
    throw std::invalid_argument("mesh level bounds out of range");
  }
  for (const auto& c : cells_) {
    if (c.level < min_level_ || c.level > max_level_ || !inside_domain(c)) {
      throw std::invalid_argument("cell outside level bounds or domain");
    }
  }
  std::sort(cells_.begin(), cells_.end(), [](const CellKey& a, const CellKey& b) {
    const std::int64_t ay = a.j * lattice_step(a.level), by = b.j * lattice_step(b.level);
    if (ay != by) return ay < by;
    const std::int64_t ax = a.i * lattice_step(a.level), bx = b.i * lattice_step(b.level);
    if (ax != bx) return ax < bx;
    return a.level < b.level;
  });

  std::vector<std::array<std::int64_t, 2>> corners;
  corners.reserve(cells_.size() * 4);
  for (const auto& c : cells_) {
    const std::int64_t s = lattice_step(c.level);
    const std::int64_t x0 = c.i * s, y0 = c.j * s;
    corners.push_back({x0, y0});
    corners.push_back({x0 + s, y0});
    corners.push_back({x0 + s, y0 + s});
    corners.push_back({x0, y0 + s});
  }
  lattice_ = corners;
  std::sort(lattice_.begin(), lattice_.end(), [](const auto& a, const auto& b) {
    return a[1] != b[1] ? a[1] < b[1] : a[0] < b[0];
  });
  lattice_.erase(std::unique(lattice_.begin(), lattice_.end()), lattice_.end());

  vertex_lookup_.reserve(lattice_.size());
  for (std::size_t v = 0; v < lattice_.size(); ++v) {
    vertex_lookup_.emplace(pack_lattice(lattice_[v][0], lattice_[v][1]), static_cast<Index>(v));
  }

  connectivity_.resize(cells_.size());
  cell_lookup_.reserve(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (int k = 0; k < 4; ++k) {
      const auto& p = corners[4 * c + static_cast<std::size_t>(k)];
      connectivity_[c][static_cast<std::size_t>(k)] = vertex_lookup_.at(pack_lattice(p[0], p[1]));
    }
    cell_lookup_.emplace(cells_[c].packed(), c);
  }

  boundary_.assign(lattice_.size(), 0u);
  for (std::size_t v = 0; v < lattice_.size(); ++v) {
    const auto [x, y] = lattice_[v];
    unsigned m = 0;
    if (y == 0) m |= static_cast<unsigned>(Boundary::bottom);
    if (x == kLattice) m |= static_cast<unsigned>(Boundary::right);
    if (y == kLattice) m |= static_cast<unsigned>(Boundary::top);
    if (x == 0) m |= static_cast<unsigned>(Boundary::left);
    boundary_[v] = m;
  }

  // A vertex sitting on the midpoint of a cell edge is hanging; with 2:1
  // balance its masters are that edge's endpoints.
  hanging_.assign(lattice_.size(), 0);
  std::map<Index, HangingConstraint> found;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& cv = connectivity_[c];
    for (int e = 0; e < 4; ++e) {
      const Index a = cv[static_cast<std::size_t>(e)];
      const Index b = cv[static_cast<std::size_t>((e + 1) % 4)];
      const auto pa = lattice_[static_cast<std::size_t>(a)];
      const auto pb = lattice_[static_cast<std::size_t>(b)];
      const auto mid = find_vertex((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2);
      if (!mid) continue;
      HangingConstraint h;
      h.node = *mid;
      h.masters = {std::min(a, b), std::max(a, b)};
      found.emplace(h.node, h);
    }
  }
  for (const auto& [node, h] : found) {
    hanging_[static_cast<std::size_t>(node)] = 1;
    constraints_.push_back(h);
  }
  for (const auto& h : constraints_) {
    for (Index m : h.masters) {
      if (hanging_[static_cast<std::size_t>(m)]) {
        throw std::logic_error("chained hanging constraint: mesh is not 2:1 balanced");
      }
    }
  }
}

Mesh Mesh::uniform(int level) { return uniform(level, level, level); }

Mesh Mesh::uniform(int level, int min_level, int max_level) {
  if (level < 1) throw std::invalid_argument("uniform mesh level must be >= 1");
  const std::int64_t n = std::int64_t{1} << level;
  std::vector<CellKey> cells;
  cells.reserve(static_cast<std::size_t>(n * n));
  for (std::int64_t j = 0; j < n; ++j) {
    for (std::int64_t i = 0; i < n; ++i) cells.push_back({level, i, j});
  }
  return Mesh(std::move(cells), min_level, max_level);
}

Point Mesh::lower_left(std::size_t c) const {
  const auto& k = cells_[c];
  const double h = k.size();
  return {static_cast<double>(k.i) * h, static_cast<double>(k.j) * h};
}

Point Mesh::cell_center(std::size_t c) const {
  const Point p = lower_left(c);
  const double h = cell_size(c);
  return {p.x + 0.5 * h, p.y + 0.5 * h};
}

Point Mesh::vertex(Index v) const {
  const auto& p = lattice_[static_cast<std::size_t>(v)];
  return {static_cast<double>(p[0]) / static_cast<double>(kLattice),
          static_cast<double>(p[1]) / static_cast<double>(kLattice)};
}

std::optional<Index> Mesh::find_vertex(std::int64_t lx, std::int64_t ly) const {
  const auto it = vertex_lookup_.find(pack_lattice(lx, ly));
  if (it == vertex_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Mesh::find_cell(const CellKey& key) const {
  const auto it = cell_lookup_.find(key.packed());
  if (it == cell_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t Mesh::locate(Point p) const {
  if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
    throw std::out_of_range("point outside the unit square");
  }
  const auto to_lattice = [](double s) {
    auto l = static_cast<std::int64_t>(s * static_cast<double>(kLattice));
    return std::clamp<std::int64_t>(l, 0, kLattice - 1);
  };
  const std::int64_t lx = to_lattice(p.x), ly = to_lattice(p.y);
  for (int level = min_level_; level <= max_level_; ++level) {
    const int shift = kMaxTreeLevel - level;
    if (auto c = find_cell({level, lx >> shift, ly >> shift})) return *c;
  }
  throw std::logic_error("point not covered by any active cell");
}

Mesh refine(const Mesh& mesh, std::span<const std::size_t> flags, AdaptReport* report) {
  AdaptReport rep;
  CellSet set(mesh);
  std::vector<CellKey> queue;

  const auto split = [&](const CellKey& k) {
    set.erase(k);
    for (int c = 0; c < 4; ++c) {
      set.insert(k.child(c));
      queue.push_back(k.child(c));
    }
  };

  std::vector<std::size_t> unique_flags(flags.begin(), flags.end());
  std::sort(unique_flags.begin(), unique_flags.end());
  unique_flags.erase(std::unique(unique_flags.begin(), unique_flags.end()), unique_flags.end());
  rep.requested = unique_flags.size();
  for (std::size_t c : unique_flags) {
    if (c >= mesh.n_cells()) throw std::out_of_range("refine flag names no active cell");
    const CellKey& k = mesh.cell(c);
    if (k.level >= mesh.max_level()) {
      ++rep.skipped;
      continue;
    }
    split(k);
    ++rep.applied;
  }

  while (!queue.empty()) {
    const CellKey f = queue.back();
    queue.pop_back();
    if (!set.contains(f)) continue;
    for (const auto& d : kEdgeDirs) {
      const CellKey n{f.level, f.i + d[0], f.j + d[1]};
      if (!inside_domain(n)) continue;
      const auto leaf = set.leaf_covering(n);
      if (leaf && leaf->level < f.level - 1) {
        split(*leaf);
        ++rep.closure;
      }
    }
  }

  if (report) *report = rep;
  return Mesh(set.keys(), mesh.min_level(), mesh.max_level());
}

Mesh coarsen(const Mesh& mesh, std::span<const std::size_t> flags, AdaptReport* report) {
  AdaptReport rep;
  CellSet set(mesh);

  std::unordered_set<std::uint64_t> flagged;
  for (std::size_t c : flags) {
    if (c >= mesh.n_cells()) throw std::out_of_range("coarsen flag names no active cell");
    flagged.insert(mesh.cell(c).packed());
  }
  rep.requested = flagged.size();

  std::map<std::uint64_t, CellKey> parents;
  for (std::size_t c : flags) {
    const CellKey& k = mesh.cell(c);
    if (k.level == 0) continue;
    parents.emplace(k.parent().packed(), k.parent());
  }

  // The merged parent may only touch neighbors at most one level finer.
  const auto merge_keeps_balance = [&](const CellKey& p) {
    for (int e = 0; e < 4; ++e) {
      const auto& d = kEdgeDirs[static_cast<std::size_t>(e)];
      const CellKey n{p.level, p.i + d[0], p.j + d[1]};
      if (!inside_domain(n)) continue;
      for (int c = 0; c < 4; ++c) {
        const CellKey q = n.child(c);
        // only the children of n that share the edge with p
        const bool adjacent = (d[0] == 1 && (c & 1) == 0) || (d[0] == -1 && (c & 1) == 1) ||
                              (d[1] == 1 && (c & 2) == 0) || (d[1] == -1 && (c & 2) == 2);
        if (!adjacent) continue;
        if (!set.leaf_covering(q)) return false;
      }
    }
    return true;
  };

  std::size_t merged_children = 0;
  for (const auto& [_, p] : parents) {
    if (p.level < mesh.min_level()) continue;
    bool complete = true;
    for (int c = 0; c < 4; ++c) {
      const CellKey k = p.child(c);
      if (!set.contains(k) || flagged.count(k.packed()) == 0) complete = false;
    }
    if (!complete || !merge_keeps_balance(p)) continue;
    for (int c = 0; c < 4; ++c) set.erase(p.child(c));
    set.insert(p);
    ++rep.applied;
    merged_children += 4;
  }
  rep.skipped = rep.requested - std::min(rep.requested, merged_children);

  if (report) *report = rep;
  return Mesh(set.keys(), mesh.min_level(), mesh.max_level());
}

ConstraintSet hanging_constraints(const Mesh& mesh) { return mesh.constraints(); }

std::vector<Index> boundary_nodes(const Mesh& mesh, Boundary region,
                                  const std::function<bool(Point)>& predicate) {
  std::vector<Index> out;
  for (Index v = 0; v < static_cast<Index>(mesh.n_vertices()); ++v) {
    if (!mesh.on_boundary(v, region)) continue;
    if (predicate && !predicate(mesh.vertex(v))) continue;
    out.push_back(v);
  }
  return out;
}

}  // namespace xifrac

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "xifrac/driver.hpp"

namespace xifrac {

inline constexpr const char* kVersion = "0.3.1";

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Legacy ASCII VTK unstructured grid. Points follow the displacement
/// numbering (slit copies included); point data u and v, cell data xi and
/// level, plus |grad u| per cell when requested.
std::string vtk_string(const SimState& state, bool with_grad_u = false);
void write_vtk(const std::filesystem::path& path, const SimState& state, bool with_grad_u = false);

struct VtkGrid {
  std::vector<Point> points;
  std::vector<std::array<Index, 4>> cells;
  std::map<std::string, std::vector<double>> point_data;
  std::map<std::string, std::vector<double>> cell_data;
};

/// Reads files produced by write_vtk (axis-aligned quads only).
VtkGrid read_vtk(const std::filesystem::path& path);
VtkGrid parse_vtk(const std::string& text);

std::string energy_csv(const std::vector<EnergyRecord>& history);
std::string xi_history_csv(const std::vector<EnergyRecord>& history);

/// (x, value) at `samples` equispaced points on [0, 1] x {y}.
std::vector<std::pair<double, double>> line_profile(const DofMap& dofs, const ScalarField& f, double y,
                                                    int samples);
std::vector<std::pair<double, double>> line_profile(const VtkGrid& grid, const std::string& field, double y,
                                                    int samples);
std::string profile_csv(const std::vector<std::pair<double, double>>& rows, const std::string& name = "value");
/// v along each configured ordinate: columns x, v_y<y0>, v_y<y1>, ...
std::string profiles_csv(const SimState& state, const std::vector<double>& ys, int samples);

/// Explicit --out, else output.dir, else $XIFRAC_OUTPUT_ROOT/run, else ./xifrac_run.
std::filesystem::path resolve_output_dir(const std::string& cli_out, const SimConfig& config);

/// Snapshot/CSV writer hooked into driver::run through the progress observer.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, const SimConfig& config);

  void write_manifest() const;
  void on_event(const ProgressEvent& event);
  void finish(const RunResult& result) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  SimConfig config_;
};

}  // namespace xifrac

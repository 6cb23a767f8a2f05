#include "xifrac/output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xifrac/config.hpp"
#include "xifrac/fem.hpp"

namespace xifrac {

namespace fs = std::filesystem;

namespace {

std::string num(double x) { return format_double(x); }

std::string y_label(double y) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", y);
  return buf;
}

void check_ordinate(double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("profile ordinate y = " + num(y) + " lies outside [0, 1]");
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::string vtk_string(const SimState& state, bool with_grad_u) {
  const Mesh& mesh = *state.mesh;
  const DofMap& ud = state.u_dofs;
  const std::size_t np = ud.n_dofs();
  const std::size_t nc = mesh.n_cells();
  std::ostringstream out;
  out << "# vtk DataFile Version 3.0\n";
  out << "xifrac step " << state.step << " t " << num(state.t) << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  for (std::size_t d = 0; d < np; ++d) {
    const Point p = ud.support_point(static_cast<Index>(d));
    out << num(p.x) << ' ' << num(p.y) << " 0\n";
  }
  out << "CELLS " << nc << ' ' << 5 * nc << "\n";
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& cd = ud.cell_dofs(c);
    out << "4 " << cd[0] << ' ' << cd[1] << ' ' << cd[2] << ' ' << cd[3] << "\n";
  }
  out << "CELL_TYPES " << nc << "\n";
  for (std::size_t c = 0; c < nc; ++c) out << "9\n";

  out << "POINT_DATA " << np << "\n";
  out << "SCALARS u double 1\nLOOKUP_TABLE default\n";
  for (std::size_t d = 0; d < np; ++d) out << num(state.u[static_cast<Index>(d)]) << "\n";
  out << "SCALARS v double 1\nLOOKUP_TABLE default\n";
  for (std::size_t d = 0; d < np; ++d) out << num(state.v[ud.vertex_of(static_cast<Index>(d))]) << "\n";

  out << "CELL_DATA " << nc << "\n";
  out << "SCALARS xi double 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < nc; ++c) out << num(state.xi.at_cell(c)) << "\n";
  out << "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (std::size_t c = 0; c < nc; ++c) out << mesh.cell(c).level << "\n";
  if (with_grad_u) {
    const ShapeValues sv = shape_eval(0.5, 0.5);
    out << "SCALARS grad_u_norm double 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& cd = ud.cell_dofs(c);
      const double h = mesh.cell_size(c);
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 4; ++k) {
        gx += state.u[cd[k]] * sv.gradients[k][0] / h;
        gy += state.u[cd[k]] * sv.gradients[k][1] / h;
      }
      out << num(std::hypot(gx, gy)) << "\n";
    }
  }
  return out.str();
}

void write_vtk(const fs::path& path, const SimState& state, bool with_grad_u) {
  write_file_atomic(path, vtk_string(state, with_grad_u));
}

VtkGrid parse_vtk(const std::string& text) {
  std::istringstream in(text);
  VtkGrid grid;
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("vtk: truncated header");
  }
  if (line.rfind("DATASET UNSTRUCTURED_GRID", 0) != 0) throw std::runtime_error("vtk: expected an unstructured grid");

  std::string word;
  std::map<std::string, std::vector<double>>* section = nullptr;
  std::size_t count = 0;
  while (in >> word) {
    if (word == "POINTS") {
      std::string type;
      in >> count >> type;
      grid.points.resize(count);
      for (auto& p : grid.points) {
        double z;
        in >> p.x >> p.y >> z;
      }
    } else if (word == "CELLS") {
      std::size_t total;
      in >> count >> total;
      grid.cells.resize(count);
      for (auto& c : grid.cells) {
        int n;
        in >> n;
        if (n != 4) throw std::runtime_error("vtk: only quadrilateral cells are supported");
        in >> c[0] >> c[1] >> c[2] >> c[3];
      }
    } else if (word == "CELL_TYPES") {
      in >> count;
      for (std::size_t i = 0; i < count; ++i) in >> word;
    } else if (word == "POINT_DATA") {
      in >> count;
      section = &grid.point_data;
    } else if (word == "CELL_DATA") {
      in >> count;
      section = &grid.cell_data;
    } else if (word == "SCALARS") {
      if (!section) throw std::runtime_error("vtk: SCALARS outside a data section");
      std::string name, type;
      in >> name >> type;
      std::getline(in, line);  // optional component count
      in >> word >> word;      // LOOKUP_TABLE default
      auto& values = (*section)[name];
      values.resize(count);
      for (auto& v : values) in >> v;
    } else {
      throw std::runtime_error("vtk: unexpected token '" + word + "'");
    }
    if (!in) throw std::runtime_error("vtk: malformed file");
  }
  return grid;
}

VtkGrid read_vtk(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_vtk(ss.str());
}

std::string energy_csv(const std::vector<EnergyRecord>& history) {
  std::string out = "t,E_strain,E_surface,E_penalty,E_total,stag_iters\n";
  for (const auto& r : history) {
    out += num(r.t) + ',' + num(r.strain) + ',' + num(r.surface) + ',' + num(r.penalty) + ',' + num(r.total) + ',' +
           std::to_string(r.staggered_iterations) + "\n";
  }
  return out;
}

std::string xi_history_csv(const std::vector<EnergyRecord>& history) {
  std::string out = "t,xi_min,xi_max,xi_mean,cells\n";
  for (const auto& r : history) {
    out += num(r.t) + ',' + num(r.xi_min) + ',' + num(r.xi_max) + ',' + num(r.xi_mean) + ',' + std::to_string(r.cells) +
           "\n";
  }
  return out;
}

std::vector<std::pair<double, double>> line_profile(const DofMap& dofs, const ScalarField& f, double y, int samples) {
  check_ordinate(y);
  if (samples < 2) throw std::invalid_argument("line_profile needs at least 2 samples");
  std::vector<std::pair<double, double>> rows;
  rows.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / (samples - 1);
    rows.emplace_back(x, evaluate(dofs, f, {x, y}));
  }
  return rows;
}

std::vector<std::pair<double, double>> line_profile(const VtkGrid& grid, const std::string& field, double y,
                                                    int samples) {
  check_ordinate(y);
  if (samples < 2) throw std::invalid_argument("line_profile needs at least 2 samples");
  const auto it = grid.point_data.find(field);
  if (it == grid.point_data.end()) throw std::invalid_argument("vtk file has no point field '" + field + "'");
  const auto& values = it->second;
  std::vector<std::pair<double, double>> rows;
  for (int i = 0; i < samples; ++i) {
    const double x = static_cast<double>(i) / (samples - 1);
    bool found = false;
    for (const auto& c : grid.cells) {
      const Point lo = grid.points[static_cast<std::size_t>(c[0])];
      const Point hi = grid.points[static_cast<std::size_t>(c[2])];
      if (x < lo.x || x > hi.x || y < lo.y || y > hi.y) continue;
      const double s = (x - lo.x) / (hi.x - lo.x);
      const double t = (y - lo.y) / (hi.y - lo.y);
      const ShapeValues sv = shape_eval(s, t);
      double val = 0.0;
      for (int k = 0; k < 4; ++k) val += sv.values[k] * values[static_cast<std::size_t>(c[k])];
      rows.emplace_back(x, val);
      found = true;
      break;
    }
    if (!found) throw std::runtime_error("vtk grid does not cover (" + num(x) + ", " + num(y) + ")");
  }
  return rows;
}

std::string profile_csv(const std::vector<std::pair<double, double>>& rows, const std::string& name) {
  std::string out = "x," + name + "\n";
  for (const auto& [x, v] : rows) out += num(x) + ',' + num(v) + "\n";
  return out;
}

std::string profiles_csv(const SimState& state, const std::vector<double>& ys, int samples) {
  std::vector<std::vector<std::pair<double, double>>> cols;
  for (double y : ys) cols.push_back(line_profile(state.v_dofs, state.v, y, samples));
  std::string out = "x";
  for (double y : ys) out += ",v_y" + y_label(y);
  out += "\n";
  for (int i = 0; i < samples; ++i) {
    out += num(static_cast<double>(i) / (samples - 1));
    for (const auto& col : cols) out += ',' + num(col[static_cast<std::size_t>(i)].second);
    out += "\n";
  }
  return out;
}

fs::path resolve_output_dir(const std::string& cli_out, const SimConfig& config) {
  if (!cli_out.empty()) return cli_out;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* root = std::getenv("XIFRAC_OUTPUT_ROOT"); root && *root) return fs::path(root) / "run";
  return "xifrac_run";
}

RunWriter::RunWriter(fs::path dir, const SimConfig& config) : dir_(std::move(dir)), config_(config) {
  fs::create_directories(dir_);
}

void RunWriter::write_manifest() const {
  std::string text = "# xifrac " + std::string(kVersion) + " run manifest; reload with `xifrac run --config`\n";
  text += serialize(config_);
  write_file_atomic(dir_ / "run_manifest.cfg", text);
}

void RunWriter::on_event(const ProgressEvent& event) {
  if (event.kind != ProgressEvent::Kind::step || config_.output_every <= 0) return;
  const SimState& s = *event.state;
  if (s.step % config_.output_every != 0) return;
  const std::string n = std::to_string(s.step);
  write_vtk(dir_ / ("fields_" + n + ".vtk"), s, true);
  if (!config_.profile_ys.empty()) {
    write_file_atomic(dir_ / ("profiles_" + n + ".csv"), profiles_csv(s, config_.profile_ys, config_.profile_samples));
  }
}

void RunWriter::finish(const RunResult& result) const {
  write_file_atomic(dir_ / "energies.csv", energy_csv(result.history));
  write_file_atomic(dir_ / "xi_history.csv", xi_history_csv(result.history));
  if (config_.output_every > 0 && !result.history.empty()) {
    const SimState& s = result.final_state;
    const std::string n = std::to_string(s.step);
    write_vtk(dir_ / ("fields_" + n + ".vtk"), s, true);
    if (!config_.profile_ys.empty()) {
      write_file_atomic(dir_ / ("profiles_" + n + ".csv"), profiles_csv(s, config_.profile_ys, config_.profile_samples));
    }
  }
}

}  // namespace xifrac

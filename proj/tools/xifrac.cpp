// xifrac command-line front end: run / calibrate / profile / tables.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "xifrac/config.hpp"
#include "xifrac/driver.hpp"
#include "xifrac/output.hpp"
#include "xifrac/phasefield.hpp"

using namespace xifrac;

namespace {

struct TableRow {
  int n;
  double h;
  double alpha;
  double zeta;
  double xi_fixed;
  double xi_optimal;
};

// Published calibration (alpha, zeta) and optimal-xi values for the benchmark meshes.
const TableRow kReference[] = {
    {128, 0.008, 493.75, 9.36, 0.0390625, 0.13687},
    {256, 0.004, 1975.0, 9.36, 0.03125, 0.06927},
    {512, 0.002, 7900.0, 9.36, 0.0234375, 0.03464},
};

int cmd_run(const std::string& config_path, const std::string& mode, const std::string& out,
            const std::vector<std::string>& overrides, bool quiet) {
  SimConfig config = config_path.empty() ? SimConfig{} : load_config(config_path);
  for (const auto& o : overrides) apply_override(config, o);
  if (!mode.empty()) apply_override(config, "regularization.mode=" + mode);

  RunWriter writer(resolve_output_dir(out, config), config);
  writer.write_manifest();
  const auto observer = [&](const ProgressEvent& e) {
    writer.on_event(e);
    if (quiet) return;
    if (e.kind == ProgressEvent::Kind::step) {
      const auto& r = *e.record;
      std::printf("step %4d t=%.4f iters=%3d%s E_strain=%.6e E_surface=%.6e xi=[%.5f, %.5f] cells=%zu\n", r.step, r.t,
                  r.staggered_iterations, r.converged ? "" : " (not converged)", r.strain, r.surface, r.xi_min,
                  r.xi_max, r.cells);
    } else {
      std::printf("  amr: refined %zu, coarsened %zu, closure %zu, at h_min %zu -> %zu cells\n", e.amr.refined,
                  e.amr.coarsened, e.amr.closure, e.amr.at_min_size, e.state->mesh->n_cells());
    }
    std::fflush(stdout);
  };
  const RunResult result = run(config, observer);
  writer.finish(result);
  if (!quiet) {
    std::printf("%zu steps, %d not converged, %s; output in %s\n", result.history.size(), result.non_converged_steps,
                result.broken ? "crack reached the bottom boundary" : "specimen intact", writer.dir().c_str());
  }
  return 0;
}

int cmd_calibrate(double h, double G_c, double c_v) {
  const double alpha = calibrate_alpha(h, G_c, c_v);
  const double zeta = calibrate_zeta(h, c_v, alpha, G_c);
  std::printf("h     = %.6g\nalpha = %.6g\nzeta  = %.6g\n", h, alpha, zeta);
  for (const auto& row : kReference) {
    if (std::abs(row.h - h) > 1e-12) continue;
    std::printf("reference (n=%d): alpha = %.6g (%+.3f%%), zeta = %.6g (%.3fx formula)\n", row.n, row.alpha,
                100.0 * (alpha - row.alpha) / row.alpha, row.zeta, row.zeta / zeta);
  }
  std::printf("note: with alpha from its own formula, zeta = 300/96 = 3.125 for every h\n");
  return 0;
}

int cmd_profile(const std::string& in, double y, int samples, const std::string& field, const std::string& out) {
  const VtkGrid grid = read_vtk(in);
  const std::string csv = profile_csv(line_profile(grid, field, y, samples), field);
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(out, csv);
  }
  return 0;
}

int cmd_tables() {
  const MaterialParams m;
  std::printf("Calibration (G_c = %g, c_v = %.6g)\n", m.G_c, m.c_v);
  std::printf("%5s %7s %12s %12s %10s %10s\n", "n", "h", "alpha", "alpha_ref", "zeta", "zeta_ref");
  for (const auto& row : kReference) {
    const double alpha = calibrate_alpha(row.h, m.G_c, m.c_v);
    std::printf("%5d %7.3f %12.4f %12.4f %10.4f %10.4f\n", row.n, row.h, alpha, row.alpha,
                calibrate_zeta(row.h, m.c_v, alpha, m.G_c), row.zeta);
  }
  std::printf("\nOptimal uniform xi at v = 1 (zeta = 9.36, reference alpha)\n");
  std::printf("%5s %11s %10s %10s\n", "n", "xi = m*h", "xi_opt", "xi_ref");
  const Mesh mesh = Mesh::uniform(1);
  const DofMap dofs(mesh);
  const ScalarField intact = ScalarField::constant(dofs, 1.0);
  for (const auto& row : kReference) {
    RegularizationParams reg;
    reg.zeta = row.zeta;
    reg.alpha = row.alpha;
    const double xi = xi_global(dofs, intact, m, reg);
    std::printf("%5d %11.7f %10.5f %10.5f\n", row.n, row.xi_fixed, xi, row.xi_optimal);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xifrac: anti-plane AT1 phase-field fracture with an optimized regularization length"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* run_cmd = app.add_subcommand("run", "run a load-stepping simulation");
  std::string config_path, mode, out;
  std::vector<std::string> overrides;
  bool quiet = false;
  run_cmd->add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
  run_cmd->add_option("--mode", mode, "xi mode override")->check(CLI::IsMember({"fixed", "global", "field"}));
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_option("--set", overrides, "key=value override (repeatable)");
  run_cmd->add_flag("--quiet", quiet, "suppress progress lines");

  auto* cal_cmd = app.add_subcommand("calibrate", "alpha and zeta for a mesh size");
  cal_cmd->set_help_flag("--help", "print this help message and exit");
  double h = 0.0, G_c = MaterialParams{}.G_c, c_v = MaterialParams{}.c_v;
  cal_cmd->add_option("--h", h, "mesh size")->required()->check(CLI::PositiveNumber);
  cal_cmd->add_option("--G_c", G_c, "critical energy release rate")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--c_v", c_v, "dissipation normalization")->check(CLI::PositiveNumber);

  auto* prof_cmd = app.add_subcommand("profile", "sample a point field of a VTK snapshot along y = const");
  std::string in, field = "v", prof_out;
  double y = 0.0;
  int samples = 201;
  prof_cmd->add_option("--in", in, "fields_<n>.vtk")->required()->check(CLI::ExistingFile);
  prof_cmd->add_option("--y", y, "ordinate in [0, 1]")->required();
  prof_cmd->add_option("--samples", samples, "equispaced samples on [0, 1]")->check(CLI::Range(2, 1000000));
  prof_cmd->add_option("--field", field, "point field name (u or v)");
  prof_cmd->add_option("--out", prof_out, "CSV path (stdout when omitted)");

  auto* tab_cmd = app.add_subcommand("tables", "calibration and optimal-xi reference report");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(config_path, mode, out, overrides, quiet);
    if (*cal_cmd) return cmd_calibrate(h, G_c, c_v);
    if (*prof_cmd) return cmd_profile(in, y, samples, field, prof_out);
    if (*tab_cmd) return cmd_tables();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "xifrac: %s\n", e.what());
    return 1;
  }
  return 1;
}

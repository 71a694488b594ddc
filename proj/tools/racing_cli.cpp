// racing: command line front end for the trajectory pipeline.
//
//   racing ingest   --inner in.csv --outer out.csv --ds 2.75 -o track.csv
//   racing fixture  --name eight_corner -o track.csv
//   racing optimize --track track.csv [--vehicle v.json] [--config c.json] -o run/
//   racing simulate --trajectory run/ [--vehicle v.json] -o sim_log.csv
//   racing preview  --track track.csv --start-s 0 --lookahead 900 [-o dir]
//   racing report   --run run/
//
// Exit codes: 0 ok, 2 input error, 3 solver failure, 4 off-track simulation.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "racing/fixtures.hpp"
#include "racing/io.hpp"
#include "racing/pipeline.hpp"

namespace {

using namespace racing;
namespace fs = std::filesystem;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOffTrack = 4;

VehicleParams load_vehicle(const std::string& file) {
  return file.empty() ? VehicleParams{} : io::read_vehicle_json(file);
}

PipelineConfig load_config(const std::string& file) {
  return file.empty() ? PipelineConfig{} : io::read_config_json(file);
}

void print_warnings(const Diagnostics& diagnostics) {
  for (const std::string& w : diagnostics.warnings) std::cerr << "warning: " << w << '\n';
}

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

int run_ingest(const std::string& inner, const std::string& outer, double ds, bool open,
               const std::string& out) {
  BoundaryCloud cloud;
  cloud.inner = io::read_points_csv(inner);
  cloud.outer = io::read_points_csv(outer);
  cloud.closed = !open;
  CenterlineOptions options;
  options.ds = ds;
  Diagnostics diagnostics;
  const TrackPath path = estimate_centerline(cloud, options, &diagnostics);
  print_warnings(diagnostics);
  io::write_track_csv(fs::path(out), path);
  std::cout << "wrote " << out << ": " << path.size() << " stations, "
            << fixed(path.total_length(), 2) << " m, " << (path.closed ? "closed" : "open") << '\n';
  return 0;
}

int run_fixture(const std::string& name, double ds, const std::string& out) {
  const TrackPath path = fixture_by_name(name, ds);
  io::write_track_csv(fs::path(out), path);
  std::cout << "wrote " << out << ": " << path.size() << " stations, "
            << fixed(path.total_length(), 2) << " m\n";
  return 0;
}

int run_optimize(const std::string& track, const std::string& vehicle, const std::string& config,
                 const std::string& out) {
  const TrackPath path = io::read_track_csv(track);
  const VehicleParams params = load_vehicle(vehicle);
  const PipelineConfig cfg = load_config(config);
  const PipelineResult result = generate_trajectory(path, boundaries_from_path(path), params, cfg);
  io::write_run(out, result);
  print_warnings(result.diagnostics);
  for (const IterationRecord& r : result.records) {
    std::cout << "iteration " << r.index << ": " << fixed(r.lap_time_integrated, 3) << " s\n";
  }
  std::cout << "status " << to_string(result.status);
  if (!result.message.empty()) std::cout << " (" << result.message << ")";
  std::cout << ", wrote " << out << '\n';
  return result.status == PipelineStatus::kSolverFailure ? kExitSolver : 0;
}

int run_simulate(const std::string& dir, const std::string& vehicle, int iteration,
                 const std::string& out) {
  const io::RunArtifacts run = io::scan_run(dir);
  const int last = static_cast<int>(run.paths.size()) - 1;
  const int i = iteration < 0 ? last : iteration;
  if (i > last) throw InputError("run has no iteration " + std::to_string(i));
  const TrackPath path = io::read_track_csv(run.paths[static_cast<std::size_t>(i)]);
  const SpeedProfile profile = io::read_profile_csv(run.profiles[static_cast<std::size_t>(i)]);
  const SimResult sim = simulate_lap(path, profile, load_vehicle(vehicle));
  io::write_sim_log_csv(fs::path(out), sim.logs);
  std::cout << "iteration " << i << ": simulated " << fixed(sim.lap_time, 3) << " s, planned "
            << fixed(profile.lap_time, 3) << " s, max |e| " << fixed(sim.max_abs_e, 3)
            << " m, wrote " << out << '\n';
  return 0;
}

int run_preview(const std::string& track, double start_s, double lookahead,
                const std::string& vehicle, const std::string& config, const std::string& out) {
  const TrackPath path = io::read_track_csv(track);
  Diagnostics diagnostics;
  const PreviewResult preview =
      preview_plan(path, start_s, lookahead, load_vehicle(vehicle), load_config(config), &diagnostics);
  print_warnings(diagnostics);
  if (!out.empty()) {
    fs::create_directories(out);
    io::write_track_csv(fs::path(out) / "window.csv", preview.window);
    io::write_track_csv(fs::path(out) / "preview_path.csv", preview.path);
    io::write_profile_csv(fs::path(out) / "preview_speed.csv", preview.profile);
  }
  std::cout << "window from station " << preview.first_station << ": " << preview.window.size()
            << " stations, " << fixed(preview.window.total_length(), 1) << " m"
            << (preview.full_lap ? " (full lap)" : "") << (preview.truncated ? " (truncated)" : "")
            << "\nQP " << to_string(preview.solution.status) << " in "
            << preview.solution.iterations << " iterations, " << fixed(preview.solution.wall_time, 3)
            << " s, objective " << preview.solution.objective << '\n';
  return 0;
}

int run_report(const std::string& dir) {
  const io::RunArtifacts run = io::scan_run(dir);
  const io::Json& iterations = run.records.at("iterations");
  std::cout << "Lap time per iteration (" << run.records.value("status", "?") << ")\n";
  std::cout << "iter  lap_time_s  delta_s  simulated_s  curvature_obj  max_violation_m\n";
  double previous = 0.0;
  for (const io::Json& r : iterations) {
    const int i = r.at("index").get<int>();
    const double t = r.at("lap_time_integrated").get<double>();
    const io::Json& sim = r.at("lap_time_simulated");
    char line[160];
    std::snprintf(line, sizeof line, "%4d  %10.3f  %7s  %11s  %13.6g  %15.2e\n", i, t,
                  i == 0 ? "-" : fixed(previous - t, 3).c_str(),
                  sim.is_null() ? "-" : fixed(sim.get<double>(), 3).c_str(),
                  r.at("curvature_objective").get<double>(),
                  r.at("max_bound_violation").get<double>());
    std::cout << line;
    previous = t;
  }
  if (run.timing) {
    std::cout << "\nComputation time per iteration\n";
    std::cout << "iter  stations  qp_time_s\n";
    for (const io::Json& r : run.timing->at("iterations")) {
      const int i = r.at("index").get<int>();
      if (i == 0) continue;
      char line[96];
      std::snprintf(line, sizeof line, "%4d  %8d  %9.3f\n", i, r.at("stations").get<int>(),
                    r.at("qp_wall_time").get<double>());
      std::cout << line;
    }
    std::cout << "total wall time " << fixed(run.timing->at("wall_time").get<double>(), 3) << " s\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Racing line generation: speed profile and minimum-curvature path iterations"};
  app.require_subcommand(1);

  std::string inner, outer, out, track, vehicle, config, dir, name;
  double ds = 2.75, start_s = 0.0, lookahead = 0.0;
  bool open = false;
  int iteration = -1;

  CLI::App* ingest = app.add_subcommand("ingest", "Estimate a centerline track from edge points");
  ingest->add_option("--inner", inner, "Inner edge CSV (east_m,north_m)")->required();
  ingest->add_option("--outer", outer, "Outer edge CSV (east_m,north_m)")->required();
  ingest->add_option("--ds", ds, "Station spacing, m")->capture_default_str();
  ingest->add_flag("--open", open, "Edges describe an open segment rather than a circuit");
  ingest->add_option("-o,--output", out, "Track CSV to write")->required();

  CLI::App* fixture = app.add_subcommand("fixture", "Write a built-in test track");
  fixture->add_option("--name", name, "annulus, straight, hairpin, chicane, eight_corner, long_circuit")
      ->required();
  fixture->add_option("--ds", ds, "Station spacing, m")->capture_default_str();
  fixture->add_option("-o,--output", out, "Track CSV to write")->required();

  CLI::App* optimize = app.add_subcommand("optimize", "Iterate speed profile and path updates");
  optimize->add_option("--track", track, "Track CSV")->required();
  optimize->add_option("--vehicle", vehicle, "Vehicle JSON");
  optimize->add_option("--config", config, "Config JSON");
  optimize->add_option("-o,--output", out, "Run directory")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "Drive the planned trajectory closed loop");
  simulate->add_option("--trajectory", dir, "Run directory written by optimize")->required();
  simulate->add_option("--vehicle", vehicle, "Vehicle JSON");
  simulate->add_option("--iteration", iteration, "Iteration to drive (default: last)");
  simulate->add_option("-o,--output", out, "Simulation log CSV")->required();

  CLI::App* preview = app.add_subcommand("preview", "Plan one window ahead of a station");
  preview->add_option("--track", track, "Track CSV")->required();
  preview->add_option("--start-s", start_s, "Window start station, m")->required();
  preview->add_option("--lookahead", lookahead, "Window length, m")->required();
  preview->add_option("--vehicle", vehicle, "Vehicle JSON");
  preview->add_option("--config", config, "Config JSON");
  preview->add_option("-o,--output", out, "Directory for window.csv, preview_path.csv, preview_speed.csv");

  CLI::App* report = app.add_subcommand("report", "Print lap time and timing tables of a run");
  report->add_option("--run", dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*ingest) return run_ingest(inner, outer, ds, open, out);
    if (*fixture) return run_fixture(name, ds, out);
    if (*optimize) return run_optimize(track, vehicle, config, out);
    if (*simulate) return run_simulate(dir, vehicle, iteration, out);
    if (*preview) return run_preview(track, start_s, lookahead, vehicle, config, out);
    if (*report) return run_report(dir);
  } catch (const OffTrackError& e) {
    std::cerr << "off track: " << e.what() << '\n';
    return kExitOffTrack;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const GeometryError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const io::Json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "racing/curvature_qp.hpp"
#include "racing/lap_simulator.hpp"
#include "racing/speed_profiler.hpp"
#include "racing/track_geometry.hpp"
#include "racing/vehicle_model.hpp"

namespace racing {

struct PipelineConfig {
  double epsilon = 0.1;  // s; stop once an iteration gains less than this
  int max_iterations = 12;
  double ds = 2.75;
  std::optional<double> lookahead;  // m, preview window length
  // Stop criterion on the simulated lap time instead of the integrated one.
  bool use_simulated_lap_time = false;
  // Simulate every iteration even when the stop criterion does not need it.
  bool simulate = false;
  QpConfig qp;
  ControllerGains gains;
  SimOptions sim;

  void validate() const;
};

struct IterationRecord {
  int index = 0;
  double lap_time_integrated = 0.0;
  std::optional<double> lap_time_simulated;
  double curvature_objective = 0.0;
  double qp_wall_time = 0.0;
  double max_bound_violation = 0.0;  // m, of the updated path before clamping
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  int stations = 0;
};

enum class PipelineStatus { kConverged, kMaxIterations, kSolverFailure };

const char* to_string(PipelineStatus status);

// paths[i] and profiles[i] belong to records[i]; index 0 is the centerline.
struct PipelineResult {
  std::vector<TrackPath> paths;
  std::vector<SpeedProfile> profiles;
  std::vector<IterationRecord> records;
  PipelineStatus status = PipelineStatus::kMaxIterations;
  std::string message;
  Diagnostics diagnostics;
  double wall_time = 0.0;

  const TrackPath& path() const { return paths.back(); }
  const SpeedProfile& profile() const { return profiles.back(); }
};

// Moves every station of `path` sideways by the optimal e, re-derives
// stations from chord lengths and curvature from the optimal course heading,
// regrids to uniform spacing near `ds` and measures the corridor again.
// `violation` receives the largest excursion outside the road before clamping.
TrackPath update_path(const TrackPath& path, const QpSolution& solution,
                      const BoundaryCloud& cloud, double ds,
                      Diagnostics* diagnostics = nullptr, double* violation = nullptr);

// Sum of (heading_k - heading_{k-1})^2 / ds^2, the path part of the QP cost.
double path_curvature_objective(const TrackPath& path);

// Alternates speed profiling and curvature minimization from `initial` until
// the lap-time gain drops to epsilon or below. A QP failure stops the loop and
// returns what was reached with status kSolverFailure.
PipelineResult generate_trajectory(const TrackPath& initial, const BoundaryCloud& cloud,
                                   const VehicleParams& params,
                                   const PipelineConfig& config = {});

// Same, starting from the centerline estimated from the edges.
PipelineResult generate_trajectory(const BoundaryCloud& cloud, const VehicleParams& params,
                                   const PipelineConfig& config = {});

struct PreviewResult {
  TrackPath window;      // the reference path over the window
  SpeedProfile profile;  // speed profile on the window
  QpSolution solution;
  TrackPath path;        // updated racing line over the window
  Eigen::Index first_station = 0;
  bool truncated = false;
  bool full_lap = false;
  std::string notice;
};

// Cuts the stations in [start_s, start_s + lookahead] out of `path` (wrapping
// on closed paths) and runs one speed profile and QP on the window with the
// initial state pinned to steady cornering and the terminal state free. A
// window covering a whole closed lap is solved as the full periodic problem.
PreviewResult preview_plan(const TrackPath& path, double start_s, double lookahead,
                           const VehicleParams& params, const PipelineConfig& config = {},
                           Diagnostics* diagnostics = nullptr);

// Stations of `path` from `first` spanning up to `length` metres; wraps on
// closed paths. The result is open and starts at s = 0.
TrackPath extract_window(const TrackPath& path, Eigen::Index first, double length);

}  // namespace racing

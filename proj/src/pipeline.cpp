#include "racing/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace racing {
namespace {

using Eigen::Index;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean_spacing(const TrackPath& path) {
  return path.total_length() / static_cast<double>(path.size() - 1);
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (!(ds > 0.0)) throw InputError("ds must be positive");
  if (max_iterations < 1) throw InputError("max_iterations must be at least 1");
  if (lookahead && !(*lookahead > 0.0)) throw InputError("lookahead must be positive");
  if (!(qp.qp_tol > 0.0) || qp.qp_max_iter < 1) throw InputError("bad QP tolerance or iteration cap");
  if (!(qp.ridge >= 0.0) || !(qp.lambda >= 0.0)) throw InputError("lambda and ridge must be non-negative");
  gains.validate();
}

const char* to_string(PipelineStatus status) {
  switch (status) {
    case PipelineStatus::kConverged: return "converged";
    case PipelineStatus::kMaxIterations: return "max_iterations";
    case PipelineStatus::kSolverFailure: return "solver_failure";
  }
  return "unknown";
}

double path_curvature_objective(const TrackPath& path) {
  double total = 0.0;
  for (Index k = 1; k < path.size(); ++k) {
    const double step = (path.heading(k) - path.heading(k - 1)) / (path.s(k) - path.s(k - 1));
    total += step * step;
  }
  return total;
}

TrackPath update_path(const TrackPath& path, const QpSolution& solution,
                      const BoundaryCloud& cloud, double ds, Diagnostics* diagnostics,
                      double* violation) {
  const Index n = path.size();
  if (solution.x.cols() != n) throw InputError("QP solution does not match the path");
  if (solution.status != QpStatus::kOptimal) {
    throw SolverError(std::string("cannot update the path from a ") +
                      to_string(solution.status) + " QP solution");
  }
  if (!(ds > 0.0)) throw InputError("ds must be positive");

  // Shift along the old normal; the old heading sets the direction. The new
  // heading and curvature come from the shifted points themselves.
  Points moved(2, n);
  for (Index k = 0; k < n; ++k) {
    moved.col(k) = path.point(k) + solution.x(state::kE, k) * path.left_normal(k);
  }
  TrackPath out = path_through_points(path.closed ? Points(moved.leftCols(n - 1)) : moved,
                                      path.closed, ds);
  const BoundaryOffsets offsets = signed_boundary_offsets(out, cloud, diagnostics, 60.0, 1e-3);
  out.w_in = offsets.w_in;
  out.w_out = offsets.w_out;
  if (violation) *violation = offsets.max_violation;
  return out;
}

PipelineResult generate_trajectory(const TrackPath& initial, const BoundaryCloud& cloud,
                                   const VehicleParams& params, const PipelineConfig& config) {
  params.validate();
  config.validate();
  initial.validate();
  const auto start = Clock::now();
  PipelineResult result;
  const bool simulate = config.simulate || config.use_simulated_lap_time;

  auto evaluate = [&](const TrackPath& path, IterationRecord& record) {
    SpeedProfile profile = compute_speed_profile(path, params, {}, &result.diagnostics);
    record.lap_time_integrated = profile.lap_time;
    record.stations = static_cast<int>(path.size());
    if (simulate) {
      record.lap_time_simulated =
          simulate_lap(path, profile, params, config.gains, config.sim).lap_time;
    }
    return profile;
  };
  auto measure = [&](const IterationRecord& record) {
    return config.use_simulated_lap_time ? *record.lap_time_simulated
                                         : record.lap_time_integrated;
  };

  IterationRecord first;
  first.curvature_objective = path_curvature_objective(initial);
  result.profiles.push_back(evaluate(initial, first));
  result.paths.push_back(initial);
  result.records.push_back(first);

  result.status = PipelineStatus::kMaxIterations;
  for (int i = 1; i <= config.max_iterations; ++i) {
    const TrackPath& path = result.paths.back();
    const QpSolution solution =
        min_curvature_step(path, result.profiles.back(), params, config.qp, &result.diagnostics);
    if (solution.status != QpStatus::kOptimal) {
      result.status = PipelineStatus::kSolverFailure;
      result.message = "QP " + std::string(to_string(solution.status)) + " at iteration " +
                       std::to_string(i) + " (KKT residual " +
                       std::to_string(solution.kkt_residual) + ")";
      break;
    }
    IterationRecord record;
    record.index = i;
    record.curvature_objective = solution.objective;
    record.qp_wall_time = solution.wall_time;
    record.qp_iterations = solution.iterations;
    record.kkt_residual = solution.kkt_residual;
    TrackPath next = update_path(path, solution, cloud, config.ds, &result.diagnostics,
                                 &record.max_bound_violation);
    SpeedProfile profile = evaluate(next, record);
    const double gain = measure(result.records.back()) - measure(record);
    result.paths.push_back(std::move(next));
    result.profiles.push_back(std::move(profile));
    result.records.push_back(record);
    if (gain <= config.epsilon) {
      result.status = PipelineStatus::kConverged;
      break;
    }
  }
  result.wall_time = seconds_since(start);
  return result;
}

PipelineResult generate_trajectory(const BoundaryCloud& cloud, const VehicleParams& params,
                                   const PipelineConfig& config) {
  CenterlineOptions options;
  options.ds = config.ds;
  Diagnostics diagnostics;
  const TrackPath centerline = estimate_centerline(cloud, options, &diagnostics);
  PipelineResult result = generate_trajectory(centerline, cloud, params, config);
  result.diagnostics.warnings.insert(result.diagnostics.warnings.begin(),
                                     diagnostics.warnings.begin(), diagnostics.warnings.end());
  return result;
}

TrackPath extract_window(const TrackPath& path, Index first, double length) {
  const Index n = path.size();
  const Index ring = path.closed ? n - 1 : n;
  if (first < 0 || first >= ring) throw InputError("window start outside the path");
  const double turn = path.heading(n - 1) - path.heading(0);

  std::vector<Index> index{first};
  std::vector<double> s{0.0};
  std::vector<double> heading{path.heading(first)};
  Index j = first;
  double lap_heading = 0.0;
  while (true) {
    Index next = j + 1;
    if (next >= n) break;  // end of an open path
    const double step = path.s(next) - path.s(j);
    if (s.back() + step > length + 1e-9) break;
    if (path.closed && next == n - 1) {
      next = 0;
      lap_heading += turn;
    }
    if (path.closed && static_cast<Index>(index.size()) > ring) break;
    index.push_back(next);
    s.push_back(s.back() + step);
    heading.push_back(path.heading(next) + lap_heading);
    j = next;
  }

  const Index m = static_cast<Index>(index.size());
  TrackPath out;
  out.closed = false;
  out.s = Eigen::Map<const Vector>(s.data(), m);
  out.heading = Eigen::Map<const Vector>(heading.data(), m);
  out.curvature.resize(m);
  out.w_in.resize(m);
  out.w_out.resize(m);
  out.east.resize(m);
  out.north.resize(m);
  for (Index i = 0; i < m; ++i) {
    const Index k = index[static_cast<std::size_t>(i)];
    out.curvature(i) = path.curvature(k);
    out.w_in(i) = path.w_in(k);
    out.w_out(i) = path.w_out(k);
    out.east(i) = path.east(k);
    out.north(i) = path.north(k);
  }
  return out;
}

PreviewResult preview_plan(const TrackPath& path, double start_s, double lookahead,
                           const VehicleParams& params, const PipelineConfig& config,
                           Diagnostics* diagnostics) {
  params.validate();
  config.validate();
  path.validate();
  const double spacing = mean_spacing(path);
  if (!(lookahead >= 10.0 * spacing)) {
    throw InputError("lookahead " + std::to_string(lookahead) +
                     " m is shorter than ten stations (" + std::to_string(10.0 * spacing) +
                     " m)");
  }
  const double L = path.total_length();
  PreviewResult out;
  const SpeedProfile full = compute_speed_profile(path, params, {}, diagnostics);

  if (path.closed && lookahead >= L - 1e-9) {
    out.full_lap = true;
    out.window = path;
    out.profile = full;
    out.solution = min_curvature_step(path, full, params, config.qp, diagnostics);
  } else {
    double start = start_s;
    if (path.closed) {
      start -= L * std::floor(start / L);
    } else if (start < 0.0 || start >= L) {
      throw InputError("start_s " + std::to_string(start_s) + " m is outside the path");
    }
    const auto it = std::upper_bound(path.s.data(), path.s.data() + path.size(), start + 1e-9);
    out.first_station = std::clamp<Index>(static_cast<Index>(it - path.s.data()) - 1, 0,
                                          path.closed ? path.size() - 2 : path.size() - 2);
    out.window = extract_window(path, out.first_station, lookahead);
    if (out.window.total_length() < lookahead - spacing) {
      out.truncated = true;
      out.notice = "window truncated at the end of the path: " +
                   std::to_string(out.window.total_length()) + " m of " +
                   std::to_string(lookahead) + " m";
      if (diagnostics) diagnostics->warn(out.notice);
    }
    if (out.window.size() < 3) throw InputError("preview window has fewer than three stations");
    ProfileOptions options;
    options.initial_speed = full.ux(out.first_station);
    out.profile = compute_speed_profile(out.window, params, options, diagnostics);
    const StateVector<double> x0 = equilibrium_state(out.window, out.profile, 0, params);
    out.solution =
        min_curvature_step(out.window, out.profile, params, config.qp, diagnostics, x0);
  }
  if (out.solution.status != QpStatus::kOptimal) {
    throw SolverError(std::string("preview QP ended ") + to_string(out.solution.status));
  }
  out.path = update_path(out.window, out.solution, boundaries_from_path(out.window), config.ds,
                         diagnostics);
  return out;
}

}  // namespace racing

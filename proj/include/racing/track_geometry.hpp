#pragma once

#include <cmath>

#include "racing/types.hpp"

namespace racing {

// Arc-length parameterized reference path with road-edge offsets.
//
// Headings follow the east/north convention where a heading of zero points
// north and positive curvature turns to the left (counter-clockwise):
//   dE/ds = -sin(heading), dN/ds = cos(heading), d(heading)/ds = K.
// Lateral offsets are positive to the left; w_in >= 0 is the distance to the
// inner (left) edge and w_out <= 0 the signed distance to the outer edge.
//
// A closed path stores the start point twice: the last station sits at
// s = total_length and repeats the first station's geometry.
struct TrackPath {
  Vector s;
  Vector curvature;
  Vector w_in;
  Vector w_out;
  Vector east;
  Vector north;
  Vector heading;
  bool closed = false;

  Eigen::Index size() const { return s.size(); }
  double total_length() const { return s.size() > 0 ? s(s.size() - 1) : 0.0; }

  // Unit vector pointing to the left of the direction of travel at station k.
  Eigen::Vector2d left_normal(Eigen::Index k) const {
    return {-std::cos(heading(k)), -std::sin(heading(k))};
  }
  Eigen::Vector2d point(Eigen::Index k) const { return {east(k), north(k)}; }
  Points points() const;

  // Throws InputError when sizes disagree, stations are not strictly
  // increasing from zero, or a station lies outside its corridor.
  void validate() const;
};

// Surveyed road edges. `inner` must lie to the left of the direction of
// travel (the inside of a counter-clockwise circuit). Closed clouds are rings
// that do not repeat their first point.
struct BoundaryCloud {
  Points inner;
  Points outer;
  bool closed = false;
};

struct CartesianAnchor {
  double east = 0.0;
  double north = 0.0;
  double heading = 0.0;
};

struct CenterlineOptions {
  double ds = 2.75;
  int smoothing_half_width = 5;
  double max_gap = 10.0;
  int refinement_passes = 3;
};

struct BoundaryOffsets {
  Vector w_in;
  Vector w_out;
  int flagged = 0;              // stations outside the corridor by more than the tolerance
  double max_violation = 0.0;   // m, before clamping
};

// Integrates heading, east and north from (s, K) with the trapezoidal rule.
TrackPath reconstruct_cartesian(const Vector& s, const Vector& curvature,
                                bool closed = false,
                                const CartesianAnchor& anchor = {});
TrackPath reconstruct_cartesian(const TrackPath& path,
                                const CartesianAnchor& anchor = {});

// Signed three-point (circumscribed circle) curvature at every vertex.
// Open polylines copy the neighbouring value to the endpoints; closed
// polylines are treated as rings without a repeated first point.
Vector curvature_of_polyline(const Points& points, bool closed);

// Distances along the local normal from each station to the two road edges.
// Stations outside the corridor get the offending offset clamped to zero;
// only violations larger than `tolerance` are flagged and warned about.
BoundaryOffsets signed_boundary_offsets(const TrackPath& path,
                                        const BoundaryCloud& cloud,
                                        Diagnostics* diagnostics = nullptr,
                                        double search_window = 60.0,
                                        double tolerance = 1e-9);

TrackPath estimate_centerline(const BoundaryCloud& cloud,
                              const CenterlineOptions& options = {},
                              Diagnostics* diagnostics = nullptr);

void validate_cloud(const BoundaryCloud& cloud, double max_gap);

// Road edges implied by a path's offsets.
BoundaryCloud boundaries_from_path(const TrackPath& path);

// Path through a polyline resampled to uniform spacing near `ds`. Heading is
// the direction of the central chord at each station and curvature its
// central difference, so both stay tied to the points. Closed input is a ring
// without the repeated first point. Offsets are left at zero.
TrackPath path_through_points(const Points& points, bool closed, double ds);

// Geometry helpers shared by the pipeline.
Vector cumulative_trapezoid(const Vector& s, const Vector& values);
// Spreads the end-point mismatch of a closed path linearly along s so the last
// station lands on the first.
void close_loop(TrackPath& path);
Vector moving_average(const Vector& values, int half_width, bool circular);
// Uniform arc-length resampling. Closed rings come back without the repeated
// point; `spacing` receives the realized uniform spacing.
Points resample_polyline(const Points& points, bool closed, double ds,
                         double* spacing = nullptr);
Vector polyline_arc_length(const Points& points);
bool polyline_self_intersects(const Points& points, bool closed);
// Signed lateral distance (left positive) and station of the nearest point on
// the path polyline to `query`.
struct Projection {
  double station = 0.0;
  double lateral = 0.0;
  Eigen::Index segment = 0;
  double fraction = 0.0;
};
Projection project_onto_path(const TrackPath& path, const Eigen::Vector2d& query);

}  // namespace racing

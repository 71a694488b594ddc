#pragma once

#include <string>
#include <vector>

#include "racing/track_geometry.hpp"

namespace racing {

// Piece of a curvature profile that varies linearly from k_start to k_end;
// constant pieces are arcs or straights, ramps are clothoids.
struct CurvatureSegment {
  double length = 0.0;
  double k_start = 0.0;
  double k_end = 0.0;
};

// Straight (k = 0) of the given length.
CurvatureSegment straight(double length);
// Constant-radius arc turning through `angle` radians (positive = left).
CurvatureSegment arc(double radius, double angle);
// Clothoid from curvature k0 to k1 over `length`.
CurvatureSegment clothoid(double length, double k0, double k1);

// Arc turning `angle` with clothoid entry and exit of length `transition`.
// The constant-radius part is shortened so the total turning stays `angle`.
std::vector<CurvatureSegment> eased_turn(double radius, double angle, double transition);

// Samples the curvature profile at spacing close to `ds` (adjusted to divide
// the total length) and integrates it into a corridor of constant half width.
// Closed tracks have their curvature scaled so the heading closes at +-2 pi.
TrackPath track_from_segments(const std::vector<CurvatureSegment>& segments, double ds,
                              double half_width, bool closed);

TrackPath annulus_track(double radius = 100.0, double width = 10.0, double ds = 2.75);
TrackPath straight_track(double length = 500.0, double width = 10.0, double ds = 2.75);
// 150 m straight into a 180 degree, 30 m radius hairpin and out again.
TrackPath hairpin_track(double ds = 2.75);
TrackPath chicane_track(double ds = 2.75);
// Closed eight-corner circuit, point symmetric about its centre. `scale`
// multiplies every length and radius.
TrackPath eight_corner_track(double ds = 2.75, double scale = 1.0);

// Builds a fixture by name: annulus, straight, hairpin, chicane, eight_corner,
// long_circuit.
TrackPath fixture_by_name(const std::string& name, double ds = 2.75);
std::vector<std::string> fixture_names();

}  // namespace racing

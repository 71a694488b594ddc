#include "racing/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace racing {

using Eigen::Index;

CurvatureSegment straight(double length) { return {length, 0.0, 0.0}; }

CurvatureSegment arc(double radius, double angle) {
  const double k = std::copysign(1.0 / radius, angle);
  return {radius * std::abs(angle), k, k};
}

CurvatureSegment clothoid(double length, double k0, double k1) { return {length, k0, k1}; }

std::vector<CurvatureSegment> eased_turn(double radius, double angle, double transition) {
  const double k = std::copysign(1.0 / radius, angle);
  const double arc_length = radius * std::abs(angle) - transition;
  if (arc_length <= 0.0) throw InputError("transition too long for the turn");
  return {clothoid(transition, 0.0, k), {arc_length, k, k}, clothoid(transition, k, 0.0)};
}

TrackPath track_from_segments(const std::vector<CurvatureSegment>& segments, double ds,
                              double half_width, bool closed) {
  if (segments.empty() || !(ds > 0.0) || !(half_width > 0.0)) {
    throw InputError("invalid fixture description");
  }
  double total = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.length > 0.0)) throw InputError("fixture segment with non-positive length");
    total += seg.length;
  }
  Index intervals = std::max<Index>(2, std::lround(total / ds));
  // Point-symmetric closed layouts close exactly when the half-lap point is a station.
  if (closed && intervals % 2 == 1) ++intervals;
  const double spacing = total / static_cast<double>(intervals);
  Vector s(intervals + 1);
  Vector k(intervals + 1);
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (Index i = 0; i <= intervals; ++i) {
    s(i) = spacing * static_cast<double>(i);
    const double at = i == intervals ? total : s(i);
    while (seg + 1 < segments.size() && at > seg_start + segments[seg].length) {
      seg_start += segments[seg].length;
      ++seg;
    }
    const double u = std::clamp((at - seg_start) / segments[seg].length, 0.0, 1.0);
    k(i) = segments[seg].k_start + u * (segments[seg].k_end - segments[seg].k_start);
  }
  if (closed) {
    k(intervals) = k(0);
    const double turning = spacing * (k.sum() - 0.5 * (k(0) + k(intervals)));
    k *= std::copysign(2.0 * std::numbers::pi, turning) / turning;
  }
  TrackPath path = reconstruct_cartesian(s, k, closed);
  path.w_in = Vector::Constant(path.size(), half_width);
  path.w_out = Vector::Constant(path.size(), -half_width);
  return path;
}

TrackPath annulus_track(double radius, double width, double ds) {
  return track_from_segments({arc(radius, 2.0 * std::numbers::pi)}, ds, 0.5 * width, true);
}

TrackPath straight_track(double length, double width, double ds) {
  return track_from_segments({straight(length)}, ds, 0.5 * width, false);
}

TrackPath hairpin_track(double ds) {
  std::vector<CurvatureSegment> segs{straight(150.0)};
  for (const auto& piece : eased_turn(30.0, std::numbers::pi, 15.0)) segs.push_back(piece);
  segs.push_back(straight(150.0));
  return track_from_segments(segs, ds, 6.0, false);
}

TrackPath chicane_track(double ds) {
  const double deg = std::numbers::pi / 180.0;
  std::vector<CurvatureSegment> segs{straight(100.0)};
  for (double angle : {30.0, -60.0, 30.0}) {
    for (const auto& piece : eased_turn(50.0, angle * deg, 10.0)) segs.push_back(piece);
  }
  segs.push_back(straight(100.0));
  return track_from_segments(segs, ds, 5.0, false);
}

TrackPath eight_corner_track(double ds, double scale) {
  const double deg = std::numbers::pi / 180.0;
  struct Corner {
    double straight_before;
    double radius;
    double angle;
  };
  const Corner half[] = {{280.0, 30.0, 90.0}, {120.0, 60.0, -30.0}, {160.0, 40.0, 75.0},
                         {90.0, 80.0, 45.0}};
  std::vector<CurvatureSegment> segs;
  for (int rep = 0; rep < 2; ++rep) {
    for (const Corner& c : half) {
      segs.push_back(straight(scale * c.straight_before));
      for (const auto& piece : eased_turn(scale * c.radius, c.angle * deg, scale * 20.0)) {
        segs.push_back(piece);
      }
    }
  }
  return track_from_segments(segs, ds, 6.0, true);
}

std::vector<std::string> fixture_names() {
  return {"annulus", "straight", "hairpin", "chicane", "eight_corner", "long_circuit"};
}

TrackPath fixture_by_name(const std::string& name, double ds) {
  if (name == "annulus") return annulus_track(100.0, 10.0, ds);
  if (name == "straight") return straight_track(500.0, 10.0, ds);
  if (name == "hairpin") return hairpin_track(ds);
  if (name == "chicane") return chicane_track(ds);
  if (name == "eight_corner") return eight_corner_track(ds);
  if (name == "long_circuit") return eight_corner_track(ds, 2.75);
  throw InputError("unknown fixture '" + name + "'");
}

}  // namespace racing

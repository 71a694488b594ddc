#include "racing/track_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace racing {
namespace {

using Eigen::Index;
using Eigen::Vector2d;

double cross(const Vector2d& a, const Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Index segment_count(const Points& polyline, bool closed) {
  const Index n = polyline.cols();
  if (n < 2) return 0;
  return closed ? n : n - 1;
}

Vector2d segment_end(const Points& polyline, Index i) {
  return polyline.col((i + 1) % polyline.cols());
}

// Signed parameter t of the intersection of the line origin + t * direction
// with the polyline, choosing the crossing closest to the origin.
std::optional<double> nearest_line_crossing(const Points& polyline, bool closed,
                                            const Vector2d& origin,
                                            const Vector2d& direction,
                                            double window) {
  std::optional<double> best;
  const Index segments = segment_count(polyline, closed);
  for (Index i = 0; i < segments; ++i) {
    const Vector2d q0 = polyline.col(i);
    const Vector2d d = segment_end(polyline, i) - q0;
    const double denom = cross(direction, d);
    if (std::abs(denom) < 1e-12) continue;
    const Vector2d r = q0 - origin;
    const double u = cross(r, direction) / denom;
    if (u < -1e-12 || u > 1.0 + 1e-12) continue;
    const double t = cross(r, d) / denom;
    if (std::abs(t) > window) continue;
    if (!best || std::abs(t) < std::abs(*best)) best = t;
  }
  return best;
}

struct NearestPoint {
  Vector2d point;
  double distance = std::numeric_limits<double>::infinity();
};

NearestPoint nearest_on_polyline(const Points& polyline, bool closed,
                                 const Vector2d& query) {
  NearestPoint best;
  const Index segments = segment_count(polyline, closed);
  if (segments == 0 && polyline.cols() == 1) {
    best.point = polyline.col(0);
    best.distance = (query - best.point).norm();
    return best;
  }
  for (Index i = 0; i < segments; ++i) {
    const Vector2d q0 = polyline.col(i);
    const Vector2d d = segment_end(polyline, i) - q0;
    const double len2 = d.squaredNorm();
    double u = len2 > 0.0 ? (query - q0).dot(d) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    const Vector2d candidate = q0 + u * d;
    const double dist = (query - candidate).norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.point = candidate;
    }
  }
  return best;
}

double signed_edge_offset(const Points& edge, bool closed, const Vector2d& p,
                          const Vector2d& normal, double window) {
  if (auto t = nearest_line_crossing(edge, closed, p, normal, window)) return *t;
  const NearestPoint nearest = nearest_on_polyline(edge, closed, p);
  const double side = (nearest.point - p).dot(normal);
  return side >= 0.0 ? nearest.distance : -nearest.distance;
}

// Unit tangents by central differences (one-sided at open ends).
Points polyline_tangents(const Points& points, bool closed) {
  const Index n = points.cols();
  Points tangents(2, n);
  for (Index i = 0; i < n; ++i) {
    Index prev = i - 1;
    Index next = i + 1;
    if (closed) {
      prev = (i + n - 1) % n;
      next = (i + 1) % n;
    } else {
      prev = std::max<Index>(prev, 0);
      next = std::min<Index>(next, n - 1);
    }
    Vector2d t = points.col(next) - points.col(prev);
    const double norm = t.norm();
    tangents.col(i) = norm > 0.0 ? Vector2d(t / norm) : Vector2d(0.0, 1.0);
  }
  return tangents;
}

Vector2d left_of(const Vector2d& tangent) { return {-tangent.y(), tangent.x()}; }

double heading_of(const Vector2d& tangent) {
  return std::atan2(-tangent.x(), tangent.y());
}

bool segments_cross(const Vector2d& a0, const Vector2d& a1, const Vector2d& b0,
                    const Vector2d& b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0.0 &&
         d2 != 0.0 && d3 != 0.0 && d4 != 0.0;
}

}  // namespace

Points TrackPath::points() const {
  Points pts(2, size());
  pts.row(0) = east.transpose();
  pts.row(1) = north.transpose();
  return pts;
}

void TrackPath::validate() const {
  const Index n = s.size();
  if (n < 2) throw InputError("track path needs at least two stations");
  if (curvature.size() != n || w_in.size() != n || w_out.size() != n ||
      east.size() != n || north.size() != n || heading.size() != n) {
    throw InputError("track path arrays have inconsistent lengths");
  }
  if (std::abs(s(0)) > 1e-9) throw InputError("first station must be at s = 0");
  for (Index k = 1; k < n; ++k) {
    if (!(s(k) > s(k - 1))) {
      throw InputError("stations must be strictly increasing (index " +
                       std::to_string(k) + ")");
    }
  }
  for (Index k = 0; k < n; ++k) {
    if (w_in(k) < -1e-9 || w_out(k) > 1e-9) {
      throw InputError("station " + std::to_string(k) +
                       " lies outside its corridor");
    }
  }
}

Vector cumulative_trapezoid(const Vector& s, const Vector& values) {
  Vector out = Vector::Zero(s.size());
  for (Index k = 1; k < s.size(); ++k) {
    out(k) = out(k - 1) + 0.5 * (values(k - 1) + values(k)) * (s(k) - s(k - 1));
  }
  return out;
}

void close_loop(TrackPath& path) {
  const Index n = path.size();
  const double gap_e = path.east(n - 1) - path.east(0);
  const double gap_n = path.north(n - 1) - path.north(0);
  const double length = path.total_length();
  for (Index i = 0; i < n; ++i) {
    path.east(i) -= gap_e * path.s(i) / length;
    path.north(i) -= gap_n * path.s(i) / length;
  }
}

TrackPath path_through_points(const Points& points, bool closed, double ds) {
  double spacing = ds;
  const Points ring = resample_polyline(points, closed, ds, &spacing);
  const Index m = ring.cols();
  if (m < 3) throw InputError("path needs at least three stations");
  if (polyline_self_intersects(ring, closed)) throw GeometryError("path intersects itself");
  const Points tangents = polyline_tangents(ring, closed);
  const Index n = closed ? m + 1 : m;
  // Unwrapped headings, one past each end so closed paths can difference
  // across the seam.
  Vector h(n);
  h(0) = heading_of(tangents.col(0));
  for (Index i = 1; i < n; ++i) {
    const double raw = heading_of(tangents.col(i % m));
    h(i) = h(i - 1) + std::remainder(raw - h(i - 1), 2.0 * std::numbers::pi);
  }
  TrackPath path;
  path.closed = closed;
  path.s = Vector::LinSpaced(n, 0.0, spacing * static_cast<double>(n - 1));
  path.heading = h;
  path.curvature.resize(n);
  if (closed) {
    const double turn = h(n - 1) - h(0);
    for (Index i = 0; i < m; ++i) {
      const double before = i > 0 ? h(i - 1) : h(m - 1) - turn;
      path.curvature(i) = (h(i + 1) - before) / (2.0 * spacing);
    }
    path.curvature(m) = path.curvature(0);
  } else {
    for (Index i = 1; i + 1 < n; ++i) path.curvature(i) = (h(i + 1) - h(i - 1)) / (2.0 * spacing);
    path.curvature(0) = (h(1) - h(0)) / spacing;
    path.curvature(n - 1) = (h(n - 1) - h(n - 2)) / spacing;
  }
  path.east.resize(n);
  path.north.resize(n);
  for (Index i = 0; i < n; ++i) {
    path.east(i) = ring(0, i % m);
    path.north(i) = ring(1, i % m);
  }
  path.w_in = Vector::Zero(n);
  path.w_out = Vector::Zero(n);
  return path;
}

TrackPath reconstruct_cartesian(const Vector& s, const Vector& curvature,
                                bool closed, const CartesianAnchor& anchor) {
  if (s.size() != curvature.size()) {
    throw InputError("stations and curvature differ in length");
  }
  if (s.size() < 2) throw InputError("need at least two stations");
  for (Index k = 1; k < s.size(); ++k) {
    if (!(s(k) > s(k - 1))) {
      throw InputError("stations must be strictly increasing");
    }
  }
  TrackPath path;
  path.s = s.array() - s(0);
  path.curvature = curvature;
  path.closed = closed;
  const Index n = s.size();
  path.heading = anchor.heading + cumulative_trapezoid(path.s, curvature).array();
  path.east.resize(n);
  path.north.resize(n);
  path.east(0) = anchor.east;
  path.north(0) = anchor.north;
  for (Index k = 1; k < n; ++k) {
    const double ds = path.s(k) - path.s(k - 1);
    path.east(k) = path.east(k - 1) -
                   0.5 * (std::sin(path.heading(k - 1)) + std::sin(path.heading(k))) * ds;
    path.north(k) = path.north(k - 1) +
                    0.5 * (std::cos(path.heading(k - 1)) + std::cos(path.heading(k))) * ds;
  }
  path.w_in = Vector::Zero(n);
  path.w_out = Vector::Zero(n);
  return path;
}

TrackPath reconstruct_cartesian(const TrackPath& path, const CartesianAnchor& anchor) {
  TrackPath out = reconstruct_cartesian(path.s, path.curvature, path.closed, anchor);
  if (path.w_in.size() == path.size()) out.w_in = path.w_in;
  if (path.w_out.size() == path.size()) out.w_out = path.w_out;
  return out;
}

Vector curvature_of_polyline(const Points& points, bool closed) {
  const Index n = points.cols();
  if (n < 3) throw InputError("curvature needs at least three points");
  const Index segments = closed ? n : n - 1;
  for (Index i = 0; i < segments; ++i) {
    if ((points.col((i + 1) % n) - points.col(i)).norm() <= 1e-12) {
      throw InputError("repeated point at index " + std::to_string(i + 1));
    }
  }
  auto menger = [&](Index ia, Index ib, Index ic) {
    const Vector2d a = points.col(ia);
    const Vector2d b = points.col(ib);
    const Vector2d c = points.col(ic);
    const double denom = (b - a).norm() * (c - b).norm() * (c - a).norm();
    if (denom <= 1e-300) return 0.0;
    return 2.0 * cross(b - a, c - b) / denom;
  };
  Vector k(n);
  if (closed) {
    for (Index i = 0; i < n; ++i) k(i) = menger((i + n - 1) % n, i, (i + 1) % n);
  } else {
    for (Index i = 1; i + 1 < n; ++i) k(i) = menger(i - 1, i, i + 1);
    k(0) = k(1);
    k(n - 1) = k(n - 2);
  }
  return k;
}

Vector moving_average(const Vector& values, int half_width, bool circular) {
  const Index n = values.size();
  if (half_width <= 0 || n == 0) return values;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    double sum = 0.0;
    int count = 0;
    for (Index j = i - half_width; j <= i + half_width; ++j) {
      if (circular) {
        sum += values(((j % n) + n) % n);
        ++count;
      } else if (j >= 0 && j < n) {
        sum += values(j);
        ++count;
      }
    }
    out(i) = sum / count;
  }
  return out;
}

Vector polyline_arc_length(const Points& points) {
  Vector s = Vector::Zero(points.cols());
  for (Index i = 1; i < points.cols(); ++i) {
    s(i) = s(i - 1) + (points.col(i) - points.col(i - 1)).norm();
  }
  return s;
}

Points resample_polyline(const Points& points, bool closed, double ds, double* spacing) {
  if (points.cols() < 2) throw InputError("cannot resample fewer than two points");
  if (!(ds > 0.0)) throw InputError("resampling spacing must be positive");
  Points work = points;
  if (closed) {
    work.conservativeResize(2, points.cols() + 1);
    work.col(points.cols()) = points.col(0);
  }
  const Vector cum = polyline_arc_length(work);
  const double length = cum(cum.size() - 1);
  const Index segments = std::max<Index>(1, std::lround(length / ds));
  const double step = length / static_cast<double>(segments);
  if (spacing) *spacing = step;
  const Index count = closed ? segments : segments + 1;
  Points out(2, count);
  Index seg = 0;
  for (Index i = 0; i < count; ++i) {
    const double target = (i == segments) ? length : step * static_cast<double>(i);
    while (seg + 2 < cum.size() && cum(seg + 1) < target) ++seg;
    const double span = cum(seg + 1) - cum(seg);
    const double u = span > 0.0 ? std::clamp((target - cum(seg)) / span, 0.0, 1.0) : 0.0;
    out.col(i) = (1.0 - u) * work.col(seg) + u * work.col(seg + 1);
  }
  return out;
}

bool polyline_self_intersects(const Points& points, bool closed) {
  const Index n = points.cols();
  const Index segments = segment_count(points, closed);
  for (Index i = 0; i < segments; ++i) {
    const Vector2d a0 = points.col(i);
    const Vector2d a1 = segment_end(points, i);
    const double min_x = std::min(a0.x(), a1.x());
    const double max_x = std::max(a0.x(), a1.x());
    const double min_y = std::min(a0.y(), a1.y());
    const double max_y = std::max(a0.y(), a1.y());
    for (Index j = i + 2; j < segments; ++j) {
      if (closed && i == 0 && j == n - 1) continue;
      const Vector2d b0 = points.col(j);
      const Vector2d b1 = segment_end(points, j);
      if (std::max(b0.x(), b1.x()) < min_x || std::min(b0.x(), b1.x()) > max_x ||
          std::max(b0.y(), b1.y()) < min_y || std::min(b0.y(), b1.y()) > max_y) {
        continue;
      }
      if (segments_cross(a0, a1, b0, b1)) return true;
    }
  }
  return false;
}

void validate_cloud(const BoundaryCloud& cloud, double max_gap) {
  auto check = [&](const Points& edge, const char* name) {
    if (edge.cols() < 4) {
      throw InputError(std::string(name) + " boundary needs at least 4 points");
    }
    if (!edge.allFinite()) {
      throw InputError(std::string(name) + " boundary has non-finite coordinates");
    }
    const Index segments = segment_count(edge, cloud.closed);
    for (Index i = 0; i < segments; ++i) {
      const double gap = (segment_end(edge, i) - edge.col(i)).norm();
      if (gap > max_gap) {
        throw InputError(std::string(name) + " boundary gap of " +
                         std::to_string(gap) + " m exceeds " +
                         std::to_string(max_gap) + " m at point " +
                         std::to_string(i));
      }
    }
  };
  check(cloud.inner, "inner");
  check(cloud.outer, "outer");
}

BoundaryOffsets signed_boundary_offsets(const TrackPath& path,
                                        const BoundaryCloud& cloud,
                                        Diagnostics* diagnostics,
                                        double search_window, double tolerance) {
  const Index n = path.size();
  BoundaryOffsets out;
  out.w_in.resize(n);
  out.w_out.resize(n);
  for (Index k = 0; k < n; ++k) {
    const Vector2d p = path.point(k);
    const Vector2d normal = path.left_normal(k);
    double w_in = signed_edge_offset(cloud.inner, cloud.closed, p, normal, search_window);
    double w_out = signed_edge_offset(cloud.outer, cloud.closed, p, normal, search_window);
    const double violation = std::max({0.0, -w_in, w_out});
    out.max_violation = std::max(out.max_violation, violation);
    if (violation > tolerance) {
      ++out.flagged;
      if (diagnostics) {
        diagnostics->warn("station " + std::to_string(k) + " (s = " +
                          std::to_string(path.s(k)) +
                          ") outside corridor; offsets clamped");
      }
    }
    out.w_in(k) = std::max(w_in, 0.0);
    out.w_out(k) = std::min(w_out, 0.0);
  }
  return out;
}

TrackPath estimate_centerline(const BoundaryCloud& cloud, const CenterlineOptions& options,
                              Diagnostics* diagnostics) {
  validate_cloud(cloud, options.max_gap);
  if (!(options.ds > 0.0)) throw InputError("ds must be positive");
  const bool closed = cloud.closed;

  Points mid(2, cloud.inner.cols());
  for (Index i = 0; i < cloud.inner.cols(); ++i) {
    const Vector2d p = cloud.inner.col(i);
    mid.col(i) = 0.5 * (p + nearest_on_polyline(cloud.outer, closed, p).point);
  }
  double spacing = options.ds;
  mid = resample_polyline(mid, closed, options.ds, &spacing);

  // Re-center each station between the edges along its own normal.
  for (int pass = 0; pass < options.refinement_passes; ++pass) {
    const Points tangents = polyline_tangents(mid, closed);
    for (Index i = 0; i < mid.cols(); ++i) {
      const Vector2d p = mid.col(i);
      const Vector2d normal = left_of(tangents.col(i));
      const auto t_in = nearest_line_crossing(cloud.inner, closed, p, normal, 1e6);
      const auto t_out = nearest_line_crossing(cloud.outer, closed, p, normal, 1e6);
      if (t_in && t_out) mid.col(i) = p + 0.5 * (*t_in + *t_out) * normal;
    }
    mid = resample_polyline(mid, closed, options.ds, &spacing);
  }
  if (polyline_self_intersects(mid, closed)) {
    throw GeometryError("estimated midline intersects itself");
  }

  Vector k_ring = moving_average(curvature_of_polyline(mid, closed),
                                 options.smoothing_half_width, closed);
  const Index ring = mid.cols();
  const Index n = closed ? ring + 1 : ring;
  Vector s(n);
  for (Index i = 0; i < n; ++i) s(i) = spacing * static_cast<double>(i);
  Vector k(n);
  k.head(ring) = k_ring;
  if (closed) {
    k(ring) = k_ring(0);
    const double turning = k_ring.sum() * spacing;
    if (std::abs(std::abs(turning) - 2.0 * std::numbers::pi) > 0.5 * std::numbers::pi) {
      throw GeometryError("closed midline turns through " + std::to_string(turning) +
                          " rad instead of +-2 pi");
    }
    // The three-point estimate under-reads curvature by O((K ds)^2); rescale so
    // the loop closes in heading.
    k *= std::copysign(2.0 * std::numbers::pi, turning) / turning;
  }

  const Points tangents = polyline_tangents(mid, closed);
  CartesianAnchor anchor{mid(0, 0), mid(1, 0), heading_of(tangents.col(0))};
  TrackPath path = reconstruct_cartesian(s, k, closed, anchor);
  if (closed) close_loop(path);

  BoundaryOffsets offsets = signed_boundary_offsets(path, cloud, diagnostics);
  path.w_in = offsets.w_in;
  path.w_out = offsets.w_out;
  if (offsets.flagged > n / 4) {
    throw GeometryError("inner boundary is not on the left of the estimated path; "
                        "check the boundary ordering");
  }
  return path;
}

BoundaryCloud boundaries_from_path(const TrackPath& path) {
  const Index n = path.closed ? path.size() - 1 : path.size();
  BoundaryCloud cloud;
  cloud.closed = path.closed;
  cloud.inner.resize(2, n);
  cloud.outer.resize(2, n);
  for (Index k = 0; k < n; ++k) {
    const Vector2d p = path.point(k);
    const Vector2d normal = path.left_normal(k);
    cloud.inner.col(k) = p + path.w_in(k) * normal;
    cloud.outer.col(k) = p + path.w_out(k) * normal;
  }
  return cloud;
}

Projection project_onto_path(const TrackPath& path, const Eigen::Vector2d& query) {
  Projection best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Index i = 0; i + 1 < path.size(); ++i) {
    const Vector2d q0 = path.point(i);
    const Vector2d d = path.point(i + 1) - q0;
    const double len2 = d.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((query - q0).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Vector2d foot = q0 + u * d;
    const double dist = (query - foot).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best.segment = i;
      best.fraction = u;
      best.station = path.s(i) + u * (path.s(i + 1) - path.s(i));
      const Vector2d tangent = len2 > 0.0 ? Vector2d(d / std::sqrt(len2)) : Vector2d(0, 1);
      best.lateral = cross(tangent, query - foot) >= 0.0 ? dist : -dist;
    }
  }
  return best;
}

}  // namespace racing

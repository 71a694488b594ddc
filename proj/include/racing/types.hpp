#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace racing {

using Vector = Eigen::VectorXd;
// Planar points stored column-wise as (east, north).
using Points = Eigen::Matrix2Xd;

// Malformed or out-of-contract input data (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Track geometry that cannot be parameterized, e.g. a self-intersecting midline.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The curvature QP did not produce an optimal point (CLI exit code 3).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-loop simulation left the road (CLI exit code 4).
class OffTrackError : public std::runtime_error {
 public:
  OffTrackError(const std::string& what, double station)
      : std::runtime_error(what), station_(station) {}
  double station() const { return station_; }

 private:
  double station_;
};

// Non-fatal conditions collected while running an operation.
struct Diagnostics {
  std::vector<std::string> warnings;
  int clamp_count = 0;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

}  // namespace racing

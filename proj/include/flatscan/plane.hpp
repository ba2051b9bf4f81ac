#pragma once

#include <vector>

#include "flatscan/measure.hpp"

namespace flatscan {

// n-dimensional affine plane: base point plus an orthonormal d x n frame.
struct AffinePlane {
  Vec base;
  Mat frame;

  AffinePlane() = default;
  // Orthonormalizes the columns of `span` (must have full column rank).
  AffinePlane(Vec base, const Mat& span);

  int n() const { return static_cast<int>(frame.cols()); }
  int d() const { return static_cast<int>(frame.rows()); }

  Vec coords(const Vec& y) const { return frame.transpose() * (y - base); }
  Vec project(const Vec& y) const { return base + frame * coords(y); }
  Vec perp(const Vec& y) const { return y - project(y); }
  double dist(const Vec& y) const { return perp(y).norm(); }
  Vec at(const Vec& u) const { return base + frame * u; }

  // Orthonormal basis of the orthogonal complement (d x (d-n)), deterministic.
  Mat normal_frame() const;
  // Image under x -> s R x + t.
  AffinePlane transformed(const Mat& R, const Vec& t, double s = 1.0) const;
  // Same plane with the base moved to the foot of the perpendicular from y.
  AffinePlane rebased(const Vec& y) const;
  double orthonormality_error() const;
};

// Hausdorff distance between the unit balls of the parallel translates through
// the origin; equals sin of the largest principal angle for equal dimensions.
double plane_angle(const AffinePlane& a, const AffinePlane& b);

}  // namespace flatscan

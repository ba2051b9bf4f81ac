#pragma once

#include <cstddef>

#include "flatscan/plane.hpp"

namespace flatscan {

constexpr std::size_t kDefaultNodeCap = 200000;

// Regular grid discretization of H^n restricted to L, clipped to the open ball 3B.
struct PlaneQuadrature {
  AffinePlane plane;
  Mat nodes;    // d x N, on the plane
  Mat coords;   // n x N, plane coordinates relative to the grid origin
  Vec weights;  // all equal to spacing^n
  double spacing = 0.0;

  int size() const { return static_cast<int>(nodes.cols()); }
  double total() const { return weights.sum(); }
  // Quadrature mass inside an open ball.
  double mass_in(const Ball& b) const;
};

// Grid origin is the foot of the perpendicular from z(B); nodes are ordered
// lexicographically in integer plane coordinates.
PlaneQuadrature flat_quadrature(const AffinePlane& L, const Ball& b, double delta,
                                std::size_t cap = kDefaultNodeCap);

// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

}  // namespace flatscan

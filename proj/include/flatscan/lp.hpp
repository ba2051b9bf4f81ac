#pragma once

#include "flatscan/measure.hpp"

namespace flatscan {

struct LpResult {
  enum class Status { Optimal, Unbounded, IterationLimit };
  Status status = Status::Optimal;
  double value = 0.0;
  Vec x;      // primal solution
  Vec y;      // dual multipliers of the rows of A (y >= 0)
  int iterations = 0;
};

// Dense tableau simplex for  max c^T x  s.t.  A x <= b, x >= 0  with b >= 0,
// so the slack basis is feasible. Dantzig pricing with a Bland fallback once
// a run of degenerate pivots is detected.
LpResult simplex_max(const Mat& A, const Vec& b, const Vec& c, int max_iter = 200000);

}  // namespace flatscan

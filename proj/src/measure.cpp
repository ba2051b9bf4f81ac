#include "flatscan/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flatscan/error.hpp"

namespace flatscan {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::EmptyBall: return "EMPTY_BALL";
    case ErrorCode::MassMismatch: return "MASS_MISMATCH";
    case ErrorCode::LpFailure: return "LP_FAILURE";
    case ErrorCode::NodeCapExceeded: return "NODE_CAP_EXCEEDED";
    case ErrorCode::AxiomViolation: return "AXIOM_VIOLATION";
    case ErrorCode::ParameterInfeasible: return "PARAMETER_INFEASIBLE";
    case ErrorCode::RootReached: return "ROOT_REACHED";
    case ErrorCode::DegenerateBase: return "DEGENERATE_BASE";
    case ErrorCode::Parse: return "PARSE_ERROR";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

// ---- KdTree ---------------------------------------------------------------

KdTree::KdTree(const Mat& points, int leaf_size) : pts_(points), leaf_(leaf_size) {
  perm_.resize(points.cols());
  std::iota(perm_.begin(), perm_.end(), 0);
  if (!perm_.empty()) build(0, static_cast<int>(perm_.size()));
}

int KdTree::build(int lo, int hi) {
  const int d = static_cast<int>(pts_.rows());
  Node nd{lo, hi, -1, -1, Vec::Constant(d, std::numeric_limits<double>::infinity()),
          Vec::Constant(d, -std::numeric_limits<double>::infinity())};
  for (int k = lo; k < hi; ++k) {
    nd.bmin = nd.bmin.cwiseMin(pts_.col(perm_[k]));
    nd.bmax = nd.bmax.cwiseMax(pts_.col(perm_[k]));
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(nd);
  if (hi - lo <= leaf_) return id;

  int axis = 0;
  (nd.bmax - nd.bmin).maxCoeff(&axis);
  const int mid = (lo + hi) / 2;
  std::nth_element(perm_.begin() + lo, perm_.begin() + mid, perm_.begin() + hi,
                   [&](int a, int b) {
                     const double va = pts_(axis, a), vb = pts_(axis, b);
                     return va < vb || (va == vb && a < b);
                   });
  const int l = build(lo, mid);
  const int r = build(mid, hi);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

double KdTree::box_dist2(const Node& nd, const Vec& z) const {
  double s = 0.0;
  for (int j = 0; j < z.size(); ++j) {
    double e = 0.0;
    if (z(j) < nd.bmin(j)) e = nd.bmin(j) - z(j);
    else if (z(j) > nd.bmax(j)) e = z(j) - nd.bmax(j);
    s += e * e;
  }
  return s;
}

std::vector<int> KdTree::ball(const Vec& z, double r) const {
  std::vector<int> out;
  if (nodes_.empty() || !(r > 0)) return out;
  const double r2 = r * r;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist2(nd, z) >= r2) continue;
    if (nd.left < 0) {
      for (int k = nd.lo; k < nd.hi; ++k)
        if ((pts_.col(perm_[k]) - z).squaredNorm() < r2) out.push_back(perm_[k]);
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int KdTree::nearest(const Vec& z, int exclude) const {
  int best = -1;
  double best2 = std::numeric_limits<double>::infinity();
  if (nodes_.empty()) return best;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist2(nd, z) > best2) continue;
    if (nd.left < 0) {
      for (int k = nd.lo; k < nd.hi; ++k) {
        const int i = perm_[k];
        if (i == exclude) continue;
        const double d2 = (pts_.col(i) - z).squaredNorm();
        if (d2 < best2 || (d2 == best2 && i < best)) {
          best2 = d2;
          best = i;
        }
      }
    } else {
      // visit the closer child last so it is popped first
      const double dl = box_dist2(nodes_[nd.left], z), dr = box_dist2(nodes_[nd.right], z);
      if (dl < dr) {
        stack.push_back(nd.right);
        stack.push_back(nd.left);
      } else {
        stack.push_back(nd.left);
        stack.push_back(nd.right);
      }
    }
  }
  return best;
}

// ---- DiscreteMeasure ------------------------------------------------------

DiscreteMeasure::DiscreteMeasure(Mat points, Vec weights) {
  if (points.cols() != weights.size())
    throw Error(ErrorCode::InvalidArgument, "point/weight count mismatch");
  if (points.rows() < 1) throw Error(ErrorCode::InvalidArgument, "ambient dimension must be >= 1");
  for (int i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0) || !std::isfinite(weights(i)))
      throw Error(ErrorCode::InvalidArgument, "atom " + std::to_string(i) + " has non-positive weight");
    if (!points.col(i).allFinite())
      throw Error(ErrorCode::InvalidArgument, "atom " + std::to_string(i) + " has non-finite coordinates");
  }
  pts_ = std::make_shared<const Mat>(std::move(points));
  w_ = std::make_shared<const Vec>(std::move(weights));
  tree_ = std::make_shared<const KdTree>(*pts_);
}

double DiscreteMeasure::total_mass() const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += (*w_)(i);
  return s;
}

std::vector<int> DiscreteMeasure::atoms_in(const Ball& b) const {
  if (empty()) return {};
  return tree_->ball(b.z, b.r);
}

double DiscreteMeasure::ball_mass(const Ball& b) const {
  double s = 0.0;
  for (int i : atoms_in(b)) s += (*w_)(i);
  return s;
}

int DiscreteMeasure::nearest(const Vec& z, int exclude) const {
  if (empty()) return -1;
  return tree_->nearest(z, exclude);
}

DiscreteMeasure DiscreteMeasure::subset(const std::vector<int>& idx) const {
  Mat p(dim(), idx.size());
  Vec w(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    p.col(k) = pts_->col(idx[k]);
    w(k) = (*w_)(idx[k]);
  }
  return DiscreteMeasure(std::move(p), std::move(w));
}

DiscreteMeasure DiscreteMeasure::mass_scaled(double k) const {
  return DiscreteMeasure(*pts_, (*w_) * k);
}

DiscreteMeasure DiscreteMeasure::transformed(const Mat& R, const Vec& t, double s) const {
  Mat p = (s * R) * (*pts_);
  p.colwise() += t;
  return DiscreteMeasure(std::move(p), *w_);
}

double DiscreteMeasure::bbox_diameter() const {
  if (empty()) return 0.0;
  return (pts_->rowwise().maxCoeff() - pts_->rowwise().minCoeff()).norm();
}

double DiscreteMeasure::median_nn_distance() const {
  if (size() < 2) return 0.0;
  std::vector<double> d(size());
  for (int i = 0; i < size(); ++i) d[i] = (pts_->col(i) - pts_->col(tree_->nearest(pts_->col(i), i))).norm();
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return d[d.size() / 2];
}

double density(const DiscreteMeasure& mu, const Ball& b, int n) {
  if (!(b.r > 0)) throw Error(ErrorCode::InvalidArgument, "density needs r(B) > 0");
  return mu.ball_mass(b) / std::pow(b.r, n);
}

}  // namespace flatscan

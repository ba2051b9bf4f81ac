#include "flatscan/plane.hpp"

#include <algorithm>
#include <cmath>

#include "flatscan/error.hpp"

namespace flatscan {

AffinePlane::AffinePlane(Vec b, const Mat& span) : base(std::move(b)) {
  if (span.rows() != base.size() || span.cols() < 1 || span.cols() > span.rows())
    throw Error(ErrorCode::InvalidArgument, "plane frame has wrong shape");
  // modified Gram-Schmidt, twice for stability
  Mat q = span;
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < q.cols(); ++j) {
      for (int i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      const double nrm = q.col(j).norm();
      if (!(nrm > 1e-300)) throw Error(ErrorCode::InvalidArgument, "plane frame is rank deficient");
      q.col(j) /= nrm;
    }
  }
  frame = std::move(q);
}

Mat AffinePlane::normal_frame() const {
  const int dd = d(), nn = n();
  Mat out(dd, dd - nn);
  int filled = 0;
  // complete with coordinate axes in order, skipping near-dependent ones
  Mat basis = frame;
  for (int e = 0; e < dd && filled < dd - nn; ++e) {
    Vec v = Vec::Unit(dd, e);
    for (int pass = 0; pass < 2; ++pass) {
      v -= basis * (basis.transpose() * v);
    }
    if (v.norm() < 1e-6) continue;
    v.normalize();
    out.col(filled++) = v;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v;
  }
  return out;
}

AffinePlane AffinePlane::transformed(const Mat& R, const Vec& t, double s) const {
  AffinePlane p;
  p.base = s * (R * base) + t;
  p.frame = R * frame;
  return p;
}

AffinePlane AffinePlane::rebased(const Vec& y) const {
  AffinePlane p = *this;
  p.base = project(y);
  return p;
}

double AffinePlane::orthonormality_error() const {
  return (frame.transpose() * frame - Mat::Identity(n(), n())).cwiseAbs().maxCoeff();
}

double plane_angle(const AffinePlane& a, const AffinePlane& b) {
  if (a.d() != b.d() || a.n() != b.n())
    throw Error(ErrorCode::InvalidArgument, "plane_angle needs planes of equal dimension");
  // columns of (I - P_b) F_a have norms sin(theta_i) in principal directions
  Mat r = a.frame - b.frame * (b.frame.transpose() * a.frame);
  Eigen::JacobiSVD<Mat> svd(r);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return std::min(1.0, s);
}

}  // namespace flatscan

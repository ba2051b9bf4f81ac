#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace flatscan {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Ball {
  Vec z;
  double r = 0.0;

  Ball scaled(double lambda) const { return {z, lambda * r}; }
};

// Static kd-tree over the columns of a point matrix. Ball queries use the
// open-ball test |x - z|^2 < r^2 so they agree exactly with a linear scan.
class KdTree {
 public:
  explicit KdTree(const Mat& points, int leaf_size = 16);

  // Indices of points strictly inside B(z, r), ascending.
  std::vector<int> ball(const Vec& z, double r) const;
  // Index of the nearest point other than `exclude` (-1 if none).
  int nearest(const Vec& z, int exclude = -1) const;

 private:
  struct Node {
    int lo, hi;        // range into perm_
    int left, right;   // child node ids, -1 for leaves
    Vec bmin, bmax;
  };
  int build(int lo, int hi);
  double box_dist2(const Node& nd, const Vec& z) const;

  const Mat& pts_;
  int leaf_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

// Finite weighted point set. Immutable after construction; copies share the index.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(Mat points, Vec weights);

  int dim() const { return static_cast<int>(pts_->rows()); }
  int size() const { return static_cast<int>(pts_->cols()); }
  bool empty() const { return !pts_ || pts_->cols() == 0; }
  const Mat& points() const { return *pts_; }
  const Vec& weights() const { return *w_; }
  Vec point(int i) const { return pts_->col(i); }
  double weight(int i) const { return (*w_)(i); }
  double total_mass() const;

  std::vector<int> atoms_in(const Ball& b) const;
  double ball_mass(const Ball& b) const;
  int nearest(const Vec& z, int exclude = -1) const;

  DiscreteMeasure subset(const std::vector<int>& idx) const;
  DiscreteMeasure mass_scaled(double k) const;
  // x -> s * R x + t, weights unchanged.
  DiscreteMeasure transformed(const Mat& R, const Vec& t, double s = 1.0) const;

  double bbox_diameter() const;
  double median_nn_distance() const;

 private:
  std::shared_ptr<const Mat> pts_;
  std::shared_ptr<const Vec> w_;
  std::shared_ptr<const KdTree> tree_;
};

// Theta_mu(B) = mu(B) / r(B)^n.
double density(const DiscreteMeasure& mu, const Ball& b, int n);

}  // namespace flatscan

#include "flatscan/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "flatscan/coefficients.hpp"
#include "flatscan/error.hpp"

namespace flatscan {

double CubeLattice::scale(int k) const { return std::pow(A0, -k) * unit; }

int CubeLattice::cube_of(int atom, int k) const { return atom_cube.at(k).at(atom); }

int default_depth(const DiscreteMeasure& mu, double A0) {
  return std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(std::max(2, mu.size()))) / std::log(A0))));
}

namespace {

// Hash grid of net points with cell side = separation, so a separation query touches 3^d cells.
class NetGrid {
 public:
  NetGrid(const Mat& pts, double side) : pts_(pts), side_(side) {}

  bool has_within(const Vec& x, double s) const {
    const int d = static_cast<int>(x.size());
    std::vector<long> base = key(x), k(d);
    const long total = static_cast<long>(std::pow(3, d));
    for (long c = 0; c < total; ++c) {
      long t = c;
      for (int i = 0; i < d; ++i) {
        k[i] = base[i] + (t % 3) - 1;
        t /= 3;
      }
      auto it = cells_.find(hash(k));
      if (it == cells_.end()) continue;
      for (int j : it->second)
        if ((pts_.col(j) - x).squaredNorm() < s * s) return true;
    }
    return false;
  }

  void insert(int j) { cells_[hash(key(pts_.col(j)))].push_back(j); }

 private:
  std::vector<long> key(const Vec& x) const {
    std::vector<long> k(x.size());
    for (int i = 0; i < x.size(); ++i) k[i] = static_cast<long>(std::floor(x(i) / side_));
    return k;
  }
  static std::size_t hash(const std::vector<long>& k) {
    std::size_t h = 1469598103934665603ULL;
    for (long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
  const Mat& pts_;
  double side_;
  std::unordered_map<std::size_t, std::vector<int>> cells_;
};

bool heavier_first(const DiscreteMeasure& mu, int a, int b) {
  if (mu.weight(a) != mu.weight(b)) return mu.weight(a) > mu.weight(b);
  for (int k = 0; k < mu.dim(); ++k) {
    if (mu.points()(k, a) != mu.points()(k, b)) return mu.points()(k, a) < mu.points()(k, b);
  }
  return a < b;
}

}  // namespace

CubeLattice build_lattice(const DiscreteMeasure& mu, double A0, double C0, int depth, double separation) {
  if (mu.empty()) throw Error(ErrorCode::InvalidArgument, "lattice needs a nonempty measure");
  if (!(A0 >= 2.0)) throw Error(ErrorCode::ParameterInfeasible, "A0 must be >= 2");
  if (!(C0 >= 1.0)) throw Error(ErrorCode::ParameterInfeasible, "C0 must be >= 1");
  if (!(separation >= 10.0)) throw Error(ErrorCode::ParameterInfeasible, "net separation below 10 breaks 5B(Q) disjointness");
  if (depth <= 0) depth = default_depth(mu, A0);
  if (depth > 40) throw Error(ErrorCode::ParameterInfeasible, "lattice depth too large");

  CubeLattice L;
  L.A0 = A0;
  L.C0 = C0;
  L.depth = depth;
  L.separation = separation;
  L.unit = mu.bbox_diameter();
  if (!(L.unit > 0)) L.unit = 1.0;
  const int N = mu.size();
  const Mat& P = mu.points();

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return heavier_first(mu, a, b); });

  // nested nets: net[k] lists atom indices, each net point remembers the level it entered
  std::vector<std::vector<int>> net(depth + 1);
  std::vector<int> born(N, -1);
  for (int k = 0; k <= depth; ++k) {
    const double s = separation * L.scale(k);
    NetGrid grid(P, s);
    if (k > 0) net[k] = net[k - 1];
    for (int j : net[k]) grid.insert(j);
    for (int i : order) {
      if (born[i] >= 0) continue;
      if (grid.has_within(P.col(i), s)) continue;
      born[i] = k;
      net[k].push_back(i);
      grid.insert(i);
    }
  }

  // parent of a net point at level k: itself if already present at k-1, else the nearest point of net[k-1]
  std::vector<std::vector<int>> up(depth + 1, std::vector<int>(N, -1));  // up[k][atom-center] = center at k-1
  for (int k = 1; k <= depth; ++k) {
    Mat coarse(mu.dim(), net[k - 1].size());
    for (std::size_t t = 0; t < net[k - 1].size(); ++t) coarse.col(t) = P.col(net[k - 1][t]);
    KdTree tree(coarse);
    for (int j : net[k]) up[k][j] = born[j] < k ? j : net[k - 1][tree.nearest(P.col(j))];
  }

  // each atom joins the nearest finest net point
  std::vector<int> finest(N);
  {
    Mat fine(mu.dim(), net[depth].size());
    for (std::size_t t = 0; t < net[depth].size(); ++t) fine.col(t) = P.col(net[depth][t]);
    KdTree tree(fine);
    for (int i = 0; i < N; ++i) finest[i] = born[i] >= 0 ? i : net[depth][tree.nearest(P.col(i))];
  }

  // cubes per level, ordered by their center's net order
  L.levels.resize(depth + 1);
  L.atom_cube.assign(depth + 1, std::vector<int>(N, -1));
  std::vector<std::vector<int>> center_cube(depth + 1);
  for (int k = 0; k <= depth; ++k) {
    center_cube[k].assign(N, -1);
    for (int j : net[k]) {
      Cube c;
      c.id = static_cast<int>(L.cubes.size());
      c.level = k;
      c.center = j;
      c.z = P.col(j);
      c.ell = 56.0 * C0 * L.scale(k);
      center_cube[k][j] = c.id;
      L.levels[k].push_back(c.id);
      L.cubes.push_back(std::move(c));
    }
  }
  for (int i = 0; i < N; ++i) {
    int c = finest[i];
    for (int k = depth; k >= 0; --k) {
      const int id = center_cube[k][c];
      L.cubes[id].atoms.push_back(i);
      L.cubes[id].mass += mu.weight(i);
      L.atom_cube[k][i] = id;
      if (k > 0) c = up[k][c];
    }
  }
  for (int k = 1; k <= depth; ++k)
    for (int id : L.levels[k]) {
      const int pid = center_cube[k - 1][up[k][L.cubes[id].center]];
      L.cubes[id].parent = pid;
      L.cubes[pid].children.push_back(id);
    }

  // radii: as large as allowed by C0, the inner-ball property and 5B disjointness
  for (int k = 0; k <= depth; ++k) {
    const double hi = C0 * L.scale(k);
    Mat centers(mu.dim(), L.levels[k].size());
    for (std::size_t t = 0; t < L.levels[k].size(); ++t) centers.col(t) = L.cubes[L.levels[k][t]].z;
    KdTree ctree(centers);
    for (std::size_t t = 0; t < L.levels[k].size(); ++t) {
      Cube& q = L.cubes[L.levels[k][t]];
      double r = hi;
      for (int i : mu.atoms_in({q.z, hi}))
        if (L.atom_cube[k][i] != q.id) r = std::min(r, (P.col(i) - q.z).norm());
      const int nb = ctree.nearest(q.z, static_cast<int>(t));
      if (nb >= 0) r = std::min(r, (centers.col(nb) - q.z).norm() / 10.0);
      q.r = r;
    }
  }

  const auto bad = check_axioms(L, mu);
  if (!bad.empty()) {
    std::ostringstream o;
    o << bad.size() << " violation(s); first: cube " << bad.front().cube << " " << bad.front().axiom << " ("
      << bad.front().detail << ")";
    throw Error(ErrorCode::AxiomViolation, o.str());
  }
  return L;
}

std::vector<AxiomViolation> check_axioms(const CubeLattice& L, const DiscreteMeasure& mu) {
  std::vector<AxiomViolation> out;
  auto fail = [&](int id, const char* ax, const std::string& detail) { out.push_back({id, ax, detail}); };
  const int N = mu.size();
  const Mat& P = mu.points();
  for (int k = 0; k <= L.depth; ++k) {
    // partition
    std::vector<int> count(N, 0);
    for (int id : L.levels[k])
      for (int i : L.cubes[id].atoms) ++count[i];
    for (int i = 0; i < N; ++i)
      if (count[i] != 1) fail(-1, "partition", "atom " + std::to_string(i) + " covered " + std::to_string(count[i]) + " times at level " + std::to_string(k));

    const double lo = std::pow(L.A0, -k) * L.unit, hi = L.C0 * lo;
    for (int id : L.levels[k]) {
      const Cube& q = L.cubes[id];
      std::vector<char> in(N, 0);
      for (int i : q.atoms) in[i] = 1;
      // nesting
      if (k > 0) {
        if (q.parent < 0) {
          fail(id, "nesting", "no parent");
        } else {
          std::vector<char> pin(N, 0);
          for (int i : L.cubes[q.parent].atoms) pin[i] = 1;
          for (int i : q.atoms)
            if (!pin[i]) {
              fail(id, "nesting", "atom " + std::to_string(i) + " outside parent");
              break;
            }
        }
      }
      // center
      if (q.center < 0 || !in[q.center] || (P.col(q.center) - q.z).norm() != 0.0) fail(id, "center", "z_Q not in Q");
      // radius sandwich
      if (!(q.r >= lo * (1 - 1e-12) && q.r <= hi * (1 + 1e-12)))
        fail(id, "radius", "r(Q) = " + std::to_string(q.r) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      // E cap B(Q) in Q, Q in 28 B(Q)
      for (int i = 0; i < N; ++i) {
        const double d2 = (P.col(i) - q.z).squaredNorm();
        if (d2 < q.r * q.r && !in[i]) {
          fail(id, "inner_ball", "atom " + std::to_string(i) + " in B(Q) but not in Q");
          break;
        }
        if (in[i] && !(d2 < 784.0 * q.r * q.r)) {
          fail(id, "outer_ball", "atom " + std::to_string(i) + " of Q outside 28B(Q)");
          break;
        }
      }
    }
    // 5B(Q) pairwise disjoint
    for (std::size_t a = 0; a < L.levels[k].size(); ++a)
      for (std::size_t b = a + 1; b < L.levels[k].size(); ++b) {
        const Cube& p = L.cubes[L.levels[k][a]];
        const Cube& q = L.cubes[L.levels[k][b]];
        if ((p.z - q.z).norm() < 5.0 * (p.r + q.r) * (1 - 1e-12))
          fail(p.id, "disjoint_5B", "overlaps cube " + std::to_string(q.id));
      }
  }
  return out;
}

std::vector<char> detect_doubling(CubeLattice& L, const DiscreteMeasure& mu, double C0) {
  std::vector<char> f(L.cubes.size());
  for (Cube& q : L.cubes) {
    q.doubling = mu.ball_mass({q.z, 100.0 * q.r}) <= C0 * mu.ball_mass(q.ball());
    f[q.id] = q.doubling;
  }
  return f;
}

std::vector<char> detect_strongly_doubling(CubeLattice& L, const DiscreteMeasure& mu, double C, double C_db) {
  std::vector<char> f(L.cubes.size());
  const double cdb = C_db > 0 ? C_db : L.C0;
  for (Cube& q : L.cubes) {
    const double inner = mu.ball_mass(q.ball());
    const bool db = mu.ball_mass({q.z, 100.0 * q.r}) <= cdb * inner;
    q.strongly_doubling = db && mu.ball_mass({q.z, 2800.0 * q.r}) <= C * inner;
    f[q.id] = q.strongly_doubling;
  }
  return f;
}

DoublingScan doubling_radius_scan(const DiscreteMeasure& mu, const Vec& x, double alpha, const ScaleGrid& grid) {
  if (!(alpha > 1)) throw Error(ErrorCode::InvalidArgument, "doubling scan needs alpha > 1");
  DoublingScan s;
  const double bound = 2.0 * std::pow(alpha, mu.dim());
  for (double r : grid.radii()) {
    s.smallest_scanned = r;
    if (mu.ball_mass({x, alpha * r}) <= bound * mu.ball_mass({x, r})) s.radii.push_back(r);
  }
  return s;
}

int ancestor_at_gap(const CubeLattice& L, int cube, int gap) {
  if (gap < 0) throw Error(ErrorCode::InvalidArgument, "ancestor gap must be >= 0");
  int id = cube;
  for (int g = 0; g < gap; ++g) {
    id = L.cube(id).parent;
    if (id < 0) throw Error(ErrorCode::RootReached, "cube " + std::to_string(cube) + " has no ancestor " + std::to_string(gap) + " levels up");
  }
  return id;
}

std::vector<DensityDrop> density_drop_report(const CubeLattice& L, const DiscreteMeasure& mu) {
  std::vector<DensityDrop> out;
  const int d = mu.dim();
  for (const Cube& q : L.cubes) {
    const double mq = mu.ball_mass({q.z, 100.0 * q.r});
    int id = q.parent;
    while (id >= 0) {
      const Cube& r = L.cube(id);
      const int gap = q.level - r.level;
      if (gap >= 2) {
        DensityDrop e{q.id, r.id, gap, mq / mu.ball_mass({r.z, 100.0 * r.r}),
                      std::pow(L.A0, -2.0 * d * (gap - 1))};
        out.push_back(e);
      }
      if (r.doubling) break;  // R may be doubling; cubes strictly between must not be
      id = r.parent;
    }
  }
  return out;
}

}  // namespace flatscan

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flatscan/decomposition.hpp"
#include "flatscan/error.hpp"
#include "flatscan/generators.hpp"

namespace flatscan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> decode(int idx, int base, int n) {
  std::vector<int> m(n);
  for (int t = 0; t < n; ++t) {
    m[t] = idx % base;
    idx /= base;
  }
  return m;
}

int encode(const std::vector<int>& m, int base) {
  int idx = 0;
  for (int t = static_cast<int>(m.size()) - 1; t >= 0; --t) idx = idx * base + m[t];
  return idx;
}

// Calls fn(idx) for every node with lo[t] <= m[t] <= hi[t].
template <class Fn>
void for_each_in_box(const std::vector<int>& lo, const std::vector<int>& hi, int base, Fn&& fn) {
  const int n = static_cast<int>(lo.size());
  for (int t = 0; t < n; ++t)
    if (hi[t] < lo[t]) return;
  std::vector<int> m = lo;
  while (true) {
    fn(encode(m, base));
    int t = 0;
    while (t < n && m[t] == hi[t]) {
      m[t] = lo[t];
      ++t;
    }
    if (t == n) return;
    ++m[t];
  }
}

double box_dist(const Vec& y, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int t = 0; t < y.size(); ++t) {
    const double e = std::max({a(t) - y(t), 0.0, y(t) - b(t)});
    s += e * e;
  }
  return std::sqrt(s);
}

// 1 on [0,2], quintic smoothstep down to 0 at 3.
double bump(double t) {
  if (t <= 2.0) return 1.0;
  if (t >= 3.0) return 0.0;
  const double x = 3.0 - t;
  return x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

// Product bump of a Whitney cube: 1 on 2J, supported in 3J.
double cube_bump(const WhitneyCube& J, const Vec& u) {
  double v = 1.0;
  for (int t = 0; t < u.size() && v > 0; ++t) v *= bump(std::abs(u(t) - J.center(t)) / (0.5 * J.side));
  return v;
}

struct TreeCubeGeom {
  int id;
  double diamB;
  Mat pts;   // R^d or L0 coordinates
  Vec bmin, bmax;
};

std::vector<TreeCubeGeom> tree_geometry(const TreeDecomposition& T, const CubeLattice& L, const AffinePlane* proj) {
  std::vector<TreeCubeGeom> out;
  for (int id : T.tree) {
    const Cube& q = L.cube(id);
    TreeCubeGeom g;
    g.id = id;
    g.diamB = 56.0 * q.r;
    const int dim = proj ? proj->n() : T.mu.dim();
    g.pts.resize(dim, q.atoms.size());
    for (std::size_t k = 0; k < q.atoms.size(); ++k)
      g.pts.col(k) = proj ? proj->coords(T.mu.point(q.atoms[k])) : T.mu.point(q.atoms[k]);
    g.bmin = g.pts.rowwise().minCoeff();
    g.bmax = g.pts.rowwise().maxCoeff();
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const TreeCubeGeom& a, const TreeCubeGeom& b) {
    return a.diamB != b.diamB ? a.diamB < b.diamB : a.id < b.id;
  });
  return out;
}

// inf over Tree cubes of dist(y, cube) + diam(B_Q); returns (value, cube id)
std::pair<double, int> inf_tree(const std::vector<TreeCubeGeom>& geo, const Vec& y) {
  double best = kInf;
  int arg = -1;
  for (const TreeCubeGeom& g : geo) {
    if (g.diamB >= best) break;
    if (box_dist(y, g.bmin, g.bmax) + g.diamB >= best) continue;
    const double dmin = std::sqrt((g.pts.colwise() - y).colwise().squaredNorm().minCoeff());
    if (dmin + g.diamB < best) best = dmin + g.diamB, arg = g.id;
  }
  return {best, arg};
}

}  // namespace

// ---- GraphGrid ------------------------------------------------------------------------------

Vec GraphGrid::node(int idx) const {
  const int nn = n();
  Vec u(nn);
  for (int t = 0; t < nn; ++t) {
    u(t) = lo(t) + (idx % M + 0.5) * h;
    idx /= M;
  }
  return u;
}

Vec GraphGrid::lift(const Vec& u, const Vec& f) const { return L0.at(u) + normals * f; }

int GraphGrid::index_of(const Vec& u) const {
  int idx = 0, stride = 1;
  for (int t = 0; t < n(); ++t) {
    const double s = std::floor((u(t) - lo(t)) / h);
    if (!(s >= 0) || s >= M) return -1;
    idx += static_cast<int>(s) * stride;
    stride *= M;
  }
  return idx;
}

Mat GraphGrid::gradient(int idx) const {
  const int nn = n();
  Mat g(F.rows(), nn);
  const std::vector<int> m = decode(idx, M, nn);
  int stride = 1;
  for (int t = 0; t < nn; ++t) {
    const bool lo_edge = m[t] == 0, hi_edge = m[t] == M - 1;
    const int a = lo_edge ? idx : idx - stride, b = hi_edge ? idx : idx + stride;
    const double span = (b - a) / stride * h;
    g.col(t) = span > 0 ? Vec((F.col(b) - F.col(a)) / span) : Vec::Zero(F.rows());
    stride *= M;
  }
  return g;
}

GraphGrid graph_grid_from_function(int n, int d, double lo, double extent, int M,
                                   const std::function<Vec(const Vec&)>& fn) {
  if (!(d > n && n >= 1 && M >= 2 && extent > 0)) throw Error(ErrorCode::InvalidArgument, "bad graph grid");
  GraphGrid g;
  g.L0 = AffinePlane(Vec::Zero(d), Mat::Identity(d, n));
  g.normals = Mat::Identity(d, d).rightCols(d - n);
  g.M = M;
  g.h = extent / M;
  g.lo = Vec::Constant(n, lo);
  int total = 1;
  for (int t = 0; t < n; ++t) total *= M;
  g.F.resize(d - n, total);
  for (int i = 0; i < total; ++i) g.F.col(i) = fn(g.node(i));
  return g;
}

DiscreteMeasure graph_surface_measure(const GraphGrid& g) {
  const int N = g.nodes(), nn = g.n();
  Mat P(g.L0.d(), N);
  Vec W(N);
  const double cell = std::pow(g.h, nn);
  for (int i = 0; i < N; ++i) {
    const Mat G = g.gradient(i);
    const Mat I = Mat::Identity(nn, nn) + G.transpose() * G;
    P.col(i) = g.graph_point(i);
    W(i) = cell * std::sqrt(I.determinant());
  }
  return DiscreteMeasure(std::move(P), std::move(W));
}

DorronsoroResult dorronsoro_check(const GraphGrid& g, const ScaleGrid& scales, int stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  DorronsoroResult res;
  const int N = g.nodes(), nn = g.n();
  for (int i = 0; i < N; ++i) res.rhs += g.gradient(i).squaredNorm() * std::pow(g.h, nn);
  const DiscreteMeasure sigma = graph_surface_measure(g);
  const std::vector<double> radii = scales.radii();
  const double step = scales.step();
  res.scales = static_cast<int>(radii.size());
  for (int i = 0; i < N; ++i) {
    const std::vector<int> m = decode(i, g.M, nn);
    bool take = true;
    for (int t = 0; t < nn; ++t)
      if (m[t] % stride != stride / 2) take = false;
    if (!take) continue;
    ++res.centers;
    const Vec x = sigma.point(i);
    double sq = 0.0, sqh = 0.0;
    for (double r : radii) {
      const CoefficientResult b = beta_p(sigma, x, r, 1, nn);
      if (b.defined()) sq += b.value * b.value * step;
      const CoefficientResult bh = beta_homogeneous(sigma, x, r, 1, nn);
      if (bh.defined()) sqh += bh.value * bh.value * step;
    }
    const double w = sigma.weight(i) * std::pow(stride, nn);
    res.lhs += w * sq;
    res.lhs_homogeneous += w * sqh;
  }
  res.ratio = res.rhs > 0 ? res.lhs / res.rhs : 0.0;
  res.ratio_homogeneous = res.rhs > 0 ? res.lhs_homogeneous / res.rhs : 0.0;
  return res;
}

// ---- build_graph ------------------------------------------------------------------------

Vec GraphModel::eval(const Vec& u) const {
  const int idx = grid.index_of(u);
  const int codim = static_cast<int>(grid.F.rows());
  if (idx < 0) return Vec::Zero(codim);
  if (rg_node[idx]) return grid.F.col(idx);
  Vec num = Vec::Zero(codim);
  double den = 0.0;
  for (int c : node_cells[idx]) {
    const WhitneyCube& J = whitney[c];
    const double b = cube_bump(J, u);
    if (b == 0.0) continue;
    den += b;
    if (J.in_I0) num += b * (J.G * u + J.g);
  }
  return den > 0 ? Vec(num / den) : Vec::Zero(codim);
}

GraphModel build_graph(const TreeDecomposition& T, const CubeLattice& L, const GraphOptions& opt) {
  if (T.status != TreeStatus::Ok || T.tree.empty()) throw Error(ErrorCode::InvalidArgument, "graph needs a nonempty tree");
  if (T.L0.frame.size() == 0) throw Error(ErrorCode::DegenerateBase, "L_0 undefined");
  GraphModel G;
  const int n = T.n, d = T.mu.dim(), codim = d - n;
  if (codim < 1) throw Error(ErrorCode::InvalidArgument, "graph needs d > n");
  const AffinePlane& L0 = T.L0;
  G.z0 = T.B0.z;
  G.r0 = T.B0.r;
  G.grid.L0 = L0;
  G.grid.normals = L0.normal_frame();
  const Mat& N0 = G.grid.normals;
  auto perp = [&](const Vec& x) -> Vec { return N0.transpose() * (x - L0.base); };
  const Cube& R0 = L.cube(T.root);

  // resolution: largest B_Q among finest-level cubes of R0
  {
    std::vector<int> stack{T.root};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      const Cube& q = L.cube(id);
      if (q.children.empty() || q.level == L.depth) G.resolution = std::max(G.resolution, 56.0 * q.r);
      for (int c : q.children) stack.push_back(c);
    }
  }
  G.d_tol = opt.d_tol > 0 ? opt.d_tol : 2.0 * G.resolution;

  // d(x) on 3B_0 and R_G
  const auto geo_d = tree_geometry(T, L, nullptr);
  G.atoms_3B0 = T.mu.atoms_in(T.B0.scaled(3.0));
  std::vector<double> d_of(T.mu.size(), kInf);
  for (int a : G.atoms_3B0) {
    const double v = inf_tree(geo_d, T.mu.point(a)).first;
    G.d.push_back(v);
    d_of[a] = v;
  }
  for (int a : R0.atoms) {
    G.mass_R0 += T.mu.weight(a);
    if (d_of[a] <= G.d_tol) {
      G.rg_atoms.push_back(a);
      G.mass_RG += T.mu.weight(a);
    }
  }

  // grid on the square of side 5 r0 about Pi0(z0)
  const double S = 5.0 * G.r0;
  const Vec c0 = L0.coords(G.z0);
  G.grid.lo = c0 - Vec::Constant(n, 2.5 * G.r0);
  double h_target = opt.h_grid;
  if (!(h_target > 0)) {
    Mat P(n, R0.atoms.size());
    for (std::size_t k = 0; k < R0.atoms.size(); ++k) P.col(k) = L0.coords(T.mu.point(R0.atoms[k]));
    h_target = R0.atoms.size() > 1 ? DiscreteMeasure(P, Vec::Ones(P.cols())).median_nn_distance() : G.r0 / 64;
    if (!(h_target > 0)) h_target = G.r0 / 64;
  }
  const int max_level = opt.max_level > 0 ? opt.max_level : (n == 1 ? 12 : n == 2 ? 7 : 5);
  const int mmax = std::clamp(static_cast<int>(std::ceil(std::log2(S / h_target))), 1, max_level);
  G.grid.M = 1 << mmax;
  G.grid.h = S / G.grid.M;
  const int M = G.grid.M;
  const double h = G.grid.h;
  int total = 1;
  for (int t = 0; t < n; ++t) total *= M;
  G.grid.F = Mat::Zero(codim, total);

  // D on nodes
  const auto geo_D = tree_geometry(T, L, &L0);
  G.D.resize(total);
  for (int i = 0; i < total; ++i) G.D[i] = inf_tree(geo_D, G.grid.node(i)).first;

  // min pyramid and top-down Whitney selection
  std::vector<std::vector<double>> pyr(mmax + 1);
  pyr[mmax] = G.D;
  for (int m = mmax - 1; m >= 0; --m) {
    const int base = 1 << m;
    int cnt = 1;
    for (int t = 0; t < n; ++t) cnt *= base;
    pyr[m].assign(cnt, kInf);
    for (int i = 0; i < static_cast<int>(pyr[m + 1].size()); ++i) {
      std::vector<int> mi = decode(i, 2 * base, n);
      for (int& v : mi) v /= 2;
      double& slot = pyr[m][encode(mi, base)];
      slot = std::min(slot, pyr[m + 1][i]);
    }
  }
  G.rg_node.assign(total, 0);
  const double node_slack = 0.5 * h * std::sqrt(static_cast<double>(n));
  std::vector<std::pair<int, int>> todo{{0, 0}};
  while (!todo.empty()) {
    const auto [m, idx] = todo.back();
    todo.pop_back();
    const double side = S / (1 << m);
    const double diam = side * std::sqrt(static_cast<double>(n));
    if (diam <= (pyr[m][idx] - node_slack) / 20.0) {
      WhitneyCube J;
      J.level = m;
      J.index = decode(idx, 1 << m, n);
      J.side = side;
      J.diam = diam;
      J.center.resize(n);
      for (int t = 0; t < n; ++t) J.center(t) = G.grid.lo(t) + (J.index[t] + 0.5) * side;
      G.whitney.push_back(std::move(J));
      continue;
    }
    if (m == mmax) {
      G.rg_node[idx] = 1;
      continue;
    }
    std::vector<int> mi = decode(idx, 1 << m, n);
    for (int c = (1 << n) - 1; c >= 0; --c) {
      std::vector<int> ch(n);
      for (int t = 0; t < n; ++t) ch[t] = 2 * mi[t] + ((c >> t) & 1);
      todo.push_back({m + 1, encode(ch, 1 << (m + 1))});
    }
  }
  std::sort(G.whitney.begin(), G.whitney.end(), [](const WhitneyCube& a, const WhitneyCube& b) {
    if (a.level != b.level) return a.level < b.level;
    return std::lexicographical_compare(a.index.rbegin(), a.index.rend(), b.index.rbegin(), b.index.rend());
  });

  // I0, companion cubes and affine pieces
  const double h0 = L0.dist(G.z0);
  for (WhitneyCube& J : G.whitney) {
    const Vec a = J.center - Vec::Constant(n, 0.5 * J.side), b = J.center + Vec::Constant(n, 0.5 * J.side);
    const double bd = box_dist(c0, a, b);
    J.in_I0 = std::sqrt(bd * bd + h0 * h0) < 1.5 * G.r0;
    J.G = Mat::Zero(codim, n);
    J.g = Vec::Zero(codim);
    if (!J.in_I0) continue;
    // ascend until diam(B_Q) reaches D at the centre, so that J lies within the reach of L_Q
    const auto [Dc, q0] = inf_tree(geo_D, J.center);
    int q = q0;
    while (q != T.root && 56.0 * L.cube(q).r < Dc) q = L.cube(q).parent;
    J.companion = q;
    J.companion_ratio = 56.0 * L.cube(q).r / J.diam;
    const AffinePlane& LQ = T.record(q)->plane;
    const Mat Mm = L0.frame.transpose() * LQ.frame;
    if (std::abs(Mm.determinant()) < 1e-8) throw Error(ErrorCode::DegenerateBase, "companion plane orthogonal to L_0");
    const Vec delta = LQ.base - L0.base;
    J.G = N0.transpose() * LQ.frame * Mm.inverse();
    J.g = N0.transpose() * delta - J.G * (L0.frame.transpose() * delta);
  }

  // cells whose 3J meets each node cell
  G.node_cells.assign(total, {});
  auto node_range = [&](const Vec& center, double half, std::vector<int>& lo, std::vector<int>& hi) {
    lo.resize(n);
    hi.resize(n);
    for (int t = 0; t < n; ++t) {
      lo[t] = std::max(0, static_cast<int>(std::floor((center(t) - half - G.grid.lo(t)) / h)));
      hi[t] = std::min(M - 1, static_cast<int>(std::floor((center(t) + half - G.grid.lo(t)) / h)));
    }
  };
  std::vector<double> den(total, 0.0);
  Mat num = Mat::Zero(codim, total);
  for (int c = 0; c < static_cast<int>(G.whitney.size()); ++c) {
    const WhitneyCube& J = G.whitney[c];
    std::vector<int> lo, hi;
    node_range(J.center, 1.5 * J.side, lo, hi);
    for_each_in_box(lo, hi, M, [&](int idx) {
      G.node_cells[idx].push_back(c);
      const Vec u = G.grid.node(idx);
      const double b = cube_bump(J, u);
      if (b == 0.0) return;
      den[idx] += b;
      if (J.in_I0) num.col(idx) += b * (J.G * u + J.g);
    });
  }

  // values on the projected good set: the R_G atom projecting into the node cell (heaviest, then
  // lexicographic), otherwise the nearest projected R_G atom
  G.node_atom.assign(total, -1);
  std::vector<std::vector<int>> bucket(total);
  Mat PG(n, G.rg_atoms.size());
  for (std::size_t k = 0; k < G.rg_atoms.size(); ++k) {
    PG.col(k) = L0.coords(T.mu.point(G.rg_atoms[k]));
    const int idx = G.grid.index_of(PG.col(k));
    if (idx >= 0) bucket[idx].push_back(G.rg_atoms[k]);
  }
  const KdTree pg_tree(PG);
  for (int i = 0; i < total; ++i) {
    if (!G.rg_node[i]) {
      G.grid.F.col(i) = den[i] > 0 ? Vec(num.col(i) / den[i]) : Vec::Zero(codim);
      continue;
    }
    if (G.rg_atoms.empty()) continue;
    int pick = -1;
    auto& bk = bucket[i];
    if (!bk.empty()) {
      if (bk.size() > 1) ++G.conflicts;
      pick = *std::min_element(bk.begin(), bk.end(), [&](int a, int b) {
        if (T.mu.weight(a) != T.mu.weight(b)) return T.mu.weight(a) > T.mu.weight(b);
        const Vec pa = T.mu.point(a), pb = T.mu.point(b);
        for (int t = 0; t < d; ++t)
          if (pa(t) != pb(t)) return pa(t) < pb(t);
        return a < b;
      });
    } else {
      pick = G.rg_atoms[pg_tree.nearest(G.grid.node(i))];
    }
    G.node_atom[i] = pick;
    G.grid.F.col(i) = perp(T.mu.point(pick));
  }

  // measured Lipschitz constant over node pairs
  {
    std::vector<Vec> U(total);
    for (int i = 0; i < total; ++i) U[i] = G.grid.node(i);
    auto pair_ratio = [&](int i, int j) {
      return (G.grid.F.col(i) - G.grid.F.col(j)).norm() / (U[i] - U[j]).norm();
    };
    if (total <= 20000) {
      for (int i = 0; i < total; ++i)
        for (int j = i + 1; j < total; ++j) G.lipschitz = std::max(G.lipschitz, pair_ratio(i, j));
    } else {
      G.lipschitz_exhaustive = false;
      std::uint64_t state = 12345;
      for (int i = 0; i < total; ++i) {
        int stride = 1;
        for (int t = 0; t < n; ++t, stride *= M)
          if (i + stride < total) G.lipschitz = std::max(G.lipschitz, pair_ratio(i, i + stride));
        for (int s = 0; s < 64; ++s) {
          const int j = static_cast<int>(unit_uniform(state) * total);
          if (j != i) G.lipschitz = std::max(G.lipschitz, pair_ratio(i, j));
        }
      }
    }
  }

  // checks
  for (int a : G.rg_atoms) {
    const Vec x = T.mu.point(a);
    const int idx = G.grid.index_of(L0.coords(x));
    if (idx >= 0) G.interpolation_error = std::max(G.interpolation_error, (G.grid.F.col(idx) - perp(x)).norm());
  }
  {
    std::vector<int> sample;
    const int step = std::max<int>(1, static_cast<int>(R0.atoms.size()) / 1500);
    for (std::size_t k = 0; k < R0.atoms.size(); k += step) sample.push_back(R0.atoms[k]);
    const double th = T.params.theta;
    for (std::size_t i = 0; i < sample.size(); ++i)
      for (std::size_t j = i + 1; j < sample.size(); ++j) {
        const Vec x1 = T.mu.point(sample[i]), x2 = T.mu.point(sample[j]);
        const double lhs = (perp(x1) - perp(x2)).norm();
        const double rhs = th * (L0.coords(x1) - L0.coords(x2)).norm() + d_of[sample[i]] + d_of[sample[j]];
        if (rhs > 0) G.eq72_constant = std::max(G.eq72_constant, lhs / rhs);
      }
  }
  const double tol = h * std::sqrt(static_cast<double>(n));
  for (const WhitneyCube& J : G.whitney) {
    std::vector<int> lo, hi;
    node_range(J.center, 7.5 * J.side, lo, hi);
    bool bad = false;
    for_each_in_box(lo, hi, M, [&](int idx) {
      if (G.D[idx] < 5.0 * J.diam - tol || G.D[idx] > 50.0 * J.diam + tol) bad = true;
    });
    if (bad) ++G.whitney_73a_violations;
    if (!J.in_I0) continue;
    double far = 0.0;
    for (int c = 0; c < (1 << n); ++c) {
      Vec corner = J.center;
      for (int t = 0; t < n; ++t) corner(t) += ((c >> t) & 1 ? 1.5 : -1.5) * J.side;
      far = std::max(far, (L0.at(corner) - G.z0).norm());
    }
    if (J.diam > 0.2 * G.r0 || !(far < 1.9 * G.r0)) ++G.whitney_74a_violations;
  }
  for (int i = 0; i < total; ++i)
    if ((L0.at(G.grid.node(i)) - G.z0).norm() >= 1.9 * G.r0 && G.grid.F.col(i).squaredNorm() != 0.0)
      G.support_ok = false;
  return G;
}

}  // namespace flatscan

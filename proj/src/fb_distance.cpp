#include "flatscan/fb_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "flatscan/error.hpp"
#include "flatscan/transport.hpp"

namespace flatscan {

namespace {

struct NodeSet {
  Mat x;
  Vec e;
  std::vector<int> node_of;
  double agg_error = 0.0;
  bool aggregated = false;
};

bool lex_less(const Mat& x, int a, int b) {
  for (int k = 0; k < x.rows(); ++k) {
    if (x(k, a) < x(k, b)) return true;
    if (x(k, a) > x(k, b)) return false;
  }
  return a < b;
}

// Keep inputs inside B and merge exactly coincident points.
NodeSet collect(const Mat& x, const Vec& e, const Ball& b) {
  NodeSet ns;
  ns.node_of.assign(x.cols(), -1);
  const double r2 = b.r * b.r;
  std::vector<int> in;
  for (int i = 0; i < x.cols(); ++i)
    if (e(i) != 0.0 && (x.col(i) - b.z).squaredNorm() < r2) in.push_back(i);
  std::sort(in.begin(), in.end(), [&](int p, int q) { return lex_less(x, p, q); });
  std::vector<int> first;
  std::vector<double> ex;
  for (std::size_t k = 0; k < in.size(); ++k) {
    if (k == 0 || x.col(in[k]) != x.col(in[k - 1])) {
      first.push_back(in[k]);
      ex.push_back(0.0);
    }
    ex.back() += e(in[k]);
    ns.node_of[in[k]] = static_cast<int>(first.size()) - 1;
  }
  ns.x.resize(x.rows(), first.size());
  ns.e.resize(first.size());
  for (std::size_t k = 0; k < first.size(); ++k) {
    ns.x.col(k) = x.col(first[k]);
    ns.e(k) = ex[k];
  }
  return ns;
}

// Merge nodes sharing a cell of side h (cells centred on the lattice h Z^d in `frame` coordinates about z(B)).
NodeSet aggregate(const NodeSet& in, const Ball& b, const Mat& frame, std::size_t cap) {
  const int d = static_cast<int>(in.x.rows());
  const Mat F = frame.size() ? frame : Mat::Identity(d, d);
  const Mat w = F.transpose() * (in.x.colwise() - b.z);
  double h = 2.0 * b.r / static_cast<double>(cap);
  std::map<std::vector<long>, std::vector<int>> cells;
  for (int attempt = 0; attempt < 400; ++attempt) {
    cells.clear();
    for (int i = 0; i < w.cols(); ++i) {
      std::vector<long> key(d);
      for (int k = 0; k < d; ++k) key[k] = std::lround(w(k, i) / h);
      cells[key].push_back(i);
    }
    if (cells.size() <= cap) break;
    h *= 1.2;
  }
  NodeSet out;
  out.aggregated = true;
  out.x.resize(d, cells.size());
  out.e.resize(cells.size());
  std::vector<int> remap(in.x.cols(), -1);
  int k = 0;
  for (const auto& [key, members] : cells) {
    double wsum = 0.0, esum = 0.0;
    Vec c = Vec::Zero(d);
    for (int i : members) {
      wsum += std::abs(in.e(i));
      esum += in.e(i);
      c += std::abs(in.e(i)) * in.x.col(i);
    }
    c /= wsum;
    for (int i : members) {
      out.agg_error += std::abs(in.e(i)) * (in.x.col(i) - c).norm();
      remap[i] = k;
    }
    out.x.col(k) = c;
    out.e(k) = esum;
    ++k;
  }
  out.node_of = in.node_of;
  for (int& v : out.node_of)
    if (v >= 0) v = remap[v];
  out.agg_error += in.agg_error;
  return out;
}

}  // namespace

FBResult f_b_solve(const Mat& x, const Vec& e, const Ball& b, const FBOptions& opt) {
  if (!(b.r > 0)) throw Error(ErrorCode::InvalidArgument, "F_B needs r(B) > 0");
  if (x.cols() != e.size()) throw Error(ErrorCode::InvalidArgument, "F_B: point/mass count mismatch");
  NodeSet ns = collect(x, e, b);
  if (ns.x.cols() > static_cast<long>(opt.node_cap)) ns = aggregate(ns, b, opt.cell_frame, opt.node_cap);

  FBResult res;
  res.nodes = ns.x;
  res.excess = ns.e;
  res.node_of = ns.node_of;
  res.approximate = ns.aggregated;
  res.aggregation_error = ns.agg_error;
  const int K = static_cast<int>(ns.x.cols());
  res.gradient = Vec::Zero(K);
  if (opt.potentials) res.potentials = Vec::Zero(K);
  if (K == 0) return res;

  Vec bd(K);
  for (int i = 0; i < K; ++i) bd(i) = std::max(0.0, b.r - (ns.x.col(i) - b.z).norm());
  std::vector<int> P, N;
  for (int i = 0; i < K; ++i) {
    if (ns.e(i) > 0) P.push_back(i);
    else if (ns.e(i) < 0) N.push_back(i);
  }
  const int mp = static_cast<int>(P.size()), mn = static_cast<int>(N.size());
  double sp = 0.0, sn = 0.0;
  for (int i : P) sp += ns.e(i);
  for (int j : N) sn -= ns.e(j);

  Vec a(mp + 1), bb(mn + 1);
  Mat C(mp + 1, mn + 1);
  for (int p = 0; p < mp; ++p) a(p) = ns.e(P[p]);
  a(mp) = sn;
  for (int q = 0; q < mn; ++q) bb(q) = -ns.e(N[q]);
  bb(mn) = sp;
  for (int p = 0; p < mp; ++p) {
    for (int q = 0; q < mn; ++q) C(p, q) = (ns.x.col(P[p]) - ns.x.col(N[q])).norm();
    C(p, mn) = bd(P[p]);
  }
  for (int q = 0; q < mn; ++q) C(mp, q) = bd(N[q]);
  C(mp, mn) = 0.0;

  TransportSolution ts = solve_transport(a, bb, C);
  res.value = std::max(0.0, ts.cost);
  for (int p = 0; p < mp; ++p) res.gradient(P[p]) = ts.u(p) + ts.v(mn);
  for (int q = 0; q < mn; ++q) res.gradient(N[q]) = -ts.v(q) - ts.u(mp);

  if (!opt.potentials) return res;

  // Shortest paths from the boundary node over constraint arcs; arcs carrying
  // flow are tightened to equalities (complementary slackness).
  const int B = K;  // boundary node index
  Mat W(K + 1, K + 1);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) W(i, j) = (i == j) ? 0.0 : (ns.x.col(i) - ns.x.col(j)).norm();
    W(B, i) = bd(i);
    W(i, B) = bd(i);
  }
  W(B, B) = 0.0;
  const double ftol = 1e-14 * std::max(sp, sn);
  for (int p = 0; p < mp; ++p) {
    for (int q = 0; q < mn; ++q)
      if (ts.plan(p, q) > ftol) W(P[p], N[q]) = -C(p, q);
    if (ts.plan(p, mn) > ftol) W(P[p], B) = -C(p, mn);
  }
  for (int q = 0; q < mn; ++q)
    if (ts.plan(mp, q) > ftol) W(B, N[q]) = -C(mp, q);

  Vec dist = W.row(B).transpose();
  dist(B) = 0.0;
  const double slack = 1e-13 * b.r;
  for (int pass = 0; pass <= K + 1; ++pass) {
    bool changed = false;
    for (int v = 0; v <= K; ++v)
      for (int u = 0; u <= K; ++u) {
        const double cand = dist(u) + W(u, v);
        if (cand < dist(v) - slack) {
          dist(v) = cand;
          changed = true;
        }
      }
    if (!changed) break;
  }
  long double val = 0.0L;
  for (int i = 0; i < K; ++i) {
    res.potentials(i) = dist(i) - dist(B);
    val += static_cast<long double>(res.potentials(i)) * ns.e(i);
  }
  res.potential_gap = std::abs(res.value - static_cast<double>(val));
  return res;
}

FBResult f_b_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Ball& b, const FBOptions& opt) {
  const int d = mu.empty() ? nu.dim() : mu.dim();
  const int m = mu.empty() ? 0 : mu.size(), n = nu.empty() ? 0 : nu.size();
  Mat x(d, m + n);
  Vec e(m + n);
  if (m) {
    x.leftCols(m) = mu.points();
    e.head(m) = mu.weights();
  }
  if (n) {
    x.rightCols(n) = nu.points();
    e.tail(n) = -nu.weights();
  }
  return f_b_solve(x, e, b, opt);
}

}  // namespace flatscan

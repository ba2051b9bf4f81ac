#include "flatscan/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "flatscan/error.hpp"
#include "flatscan/parallel.hpp"

namespace flatscan {

void StoppingParams::validate() const {
  if (!(A > 1 && 1 > tau && tau > 0)) throw Error(ErrorCode::InvalidArgument, "need A > 1 > tau > 0");
  if (!(theta > 0 && theta < 1)) throw Error(ErrorCode::InvalidArgument, "theta must lie in (0,1)");
  if (!(eps0 > 0 && eps0 < 1)) throw Error(ErrorCode::InvalidArgument, "eps0 must lie in (0,1)");
  if (!(eta > 0 && eta < 0.5)) throw Error(ErrorCode::InvalidArgument, "eta must lie in (0,1/2)");
  if (!(gamma > 0 && gamma < 1 && rho1 > 0 && rho2 > 0 && rho2 <= 1))
    throw Error(ErrorCode::InvalidArgument, "balanced-ball constants out of range");
}

const char* label_name(CubeLabel l) {
  switch (l) {
    case CubeLabel::None: return "none";
    case CubeLabel::Tree: return "Tree";
    case CubeLabel::HD: return "HD";
    case CubeLabel::LD: return "LD";
    case CubeLabel::BS: return "BS";
    case CubeLabel::BA: return "BA";
    case CubeLabel::F: return "F";
  }
  return "?";
}

const char* outcome_name(BalanceOutcome o) {
  switch (o) {
    case BalanceOutcome::Balanced: return "balanced";
    case BalanceOutcome::Unbalanced: return "unbalanced";
    case BalanceOutcome::Inconclusive: return "inconclusive";
  }
  return "?";
}

int default_root_level(const CubeLattice& L) {
  int k = 0;
  while (84.0 * std::pow(L.A0, -k) > 1.0) ++k;
  return std::min(k, L.depth);
}

RootChoice choose_root(CubeLattice& L, const DiscreteMeasure& mu, int level, int n) {
  if (level < 0 || level >= static_cast<int>(L.levels.size()))
    throw Error(ErrorCode::InvalidArgument, "root level outside the lattice");
  const double cdb = 2.0 * std::pow(100.0, n);
  detect_doubling(L, mu, cdb);
  detect_strongly_doubling(L, mu, 2.0 * std::pow(2800.0, n), cdb);
  Vec centroid = mu.points() * mu.weights() / mu.total_mass();
  RootChoice best, any;
  double bd = std::numeric_limits<double>::infinity(), ad = bd;
  for (int id : L.levels[level]) {
    const Cube& q = L.cube(id);
    const double dist = (q.z - centroid).norm();
    if (dist < ad) ad = dist, any.cube = id;
    if (q.strongly_doubling && dist < bd) bd = dist, best.cube = id;
  }
  if (best.cube >= 0) return best;
  any.fallback = true;
  return any;
}

GoodSetOptions pipeline_good_set_options(const DiscreteMeasure& mu, const CubeLattice& L, int root) {
  GoodSetOptions o;
  o.r_lo = 16.0 * mu.median_nn_distance();
  o.r_cap = cube_ball(L.cube(root)).r;
  o.net_divisor = 4;
  o.search.K = 4;
  return o;
}

HypothesisReport check_main_lemma_hypothesis(const DiscreteMeasure& mu, const CubeLattice& L, int root, int n,
                                             double eps0, const GoodSetOptions& opt) {
  const Cube& R0 = L.cube(root);
  HypothesisReport rep;
  rep.strongly_doubling = R0.strongly_doubling;
  const Ball B0 = cube_ball(R0);
  rep.theta_3B0 = density(mu, B0.scaled(3.0), n);
  rep.normalization = rep.theta_3B0 > 0 ? 1.0 / rep.theta_3B0 : 1.0;
  GoodSetOptions o = opt;
  o.atoms = R0.atoms;
  rep.good = good_set(mu, eps0, R0.r, n, o);
  for (std::size_t k = 0; k < rep.good.atoms.size(); ++k)
    if (!rep.good.good[k]) rep.bad_mass += mu.weight(rep.good.atoms[k]);
  rep.budget = eps0 * mu.ball_mass(B0.scaled(3.0));
  rep.holds = rep.bad_mass <= rep.budget;
  return rep;
}

// ---- stopping tree ---------------------------------------------------------------------

const CubeRecord* TreeDecomposition::record(int cube) const {
  if (cube < 0 || cube >= static_cast<int>(record_of.size()) || record_of[cube] < 0) return nullptr;
  return &records[record_of[cube]];
}

CubeLabel TreeDecomposition::label(int cube) const {
  const CubeRecord* r = record(cube);
  return r ? r->label : CubeLabel::None;
}

TreeDecomposition build_tree(const DiscreteMeasure& mu, const CubeLattice& L, int root, int n,
                             const StoppingParams& params, const TreeOptions& opt) {
  params.validate();
  TreeDecomposition T;
  T.root = root;
  T.n = n;
  T.params = params;
  const Cube& R0 = L.cube(root);
  T.B0 = cube_ball(R0);
  const double theta3 = density(mu, T.B0.scaled(3.0), n);
  if (!(theta3 > 0)) throw Error(ErrorCode::DegenerateBase, "mu(3B_0) = 0");
  T.normalization = 1.0 / theta3;
  T.mu = mu.mass_scaled(T.normalization);
  if (!R0.strongly_doubling) T.warnings.push_back("root cube is not flagged strongly doubling");

  if (opt.good_set) {
    T.good = *opt.good_set;
  } else {
    GoodSetOptions go = opt.good;
    go.atoms = R0.atoms;
    T.good = good_set(mu, params.eps0, R0.r, n, go);
  }
  std::vector<char> good(mu.size(), 0);
  for (std::size_t k = 0; k < T.good.atoms.size(); ++k) good[T.good.atoms[k]] = T.good.good[k];

  const CoefficientResult b0 = beta_p(T.mu, T.B0.z, 3.0 * T.B0.r, 2, n);
  if (!b0.defined()) throw Error(ErrorCode::DegenerateBase, "L_0 undefined");
  T.L0 = b0.plane;
  T.c0 = fit_flat_constant(T.mu, T.B0.scaled(3.0), T.L0, opt.search).c;

  const double w = T.normalization;
  T.record_of.assign(L.cubes.size(), -1);
  auto examine = [&](int id) {
    const Cube& q = L.cube(id);
    CubeRecord rec;
    rec.cube = id;
    const Ball BQ = cube_ball(q);
    rec.mass3 = T.mu.ball_mass(BQ.scaled(3.0));
    rec.mass15 = T.mu.ball_mass(BQ.scaled(1.5));
    rec.ell_n = std::pow(q.ell, n);
    double bad = 0.0;
    for (int a : q.atoms)
      if (!good[a]) bad += mu.weight(a);
    rec.bad_fraction = q.mass > 0 ? bad / q.mass : 0.0;
    rec.hd0 = rec.mass3 > params.A * rec.ell_n;
    rec.ld0 = rec.mass15 < params.tau * rec.ell_n;
    rec.bs0 = !rec.hd0 && !rec.ld0 && rec.bad_fraction > 0.5;
    rec.plane = beta_p(T.mu, q.z, 3.0 * BQ.r, 2, n).plane;
    rec.angle = plane_angle(rec.plane, T.L0);
    T.record_of[id] = static_cast<int>(T.records.size());
    T.records.push_back(std::move(rec));
  };

  // pass 1: maximal HD0 / LD0 / BS0 cubes, Tree0 above them
  std::deque<int> queue{root};
  std::vector<int> tree0;
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    examine(id);
    CubeRecord& rec = T.records.back();
    if (rec.hd0 || rec.ld0 || rec.bs0) continue;
    rec.tree0 = true;
    tree0.push_back(id);
    for (int c : L.cube(id).children) queue.push_back(c);
  }

  // R_Far over 3B_0, from Tree0 cubes
  std::vector<char> far(mu.size(), 0);
  const double se = std::sqrt(params.eps0);
  const double r3 = 3.0 * T.B0.r;
  for (int id : tree0) {
    const Cube& q = L.cube(id);
    const CubeRecord& rec = T.records[T.record_of[id]];
    for (int a : T.mu.atoms_in(cube_ball(q, 3.0))) {
      if (far[a]) continue;
      const Vec x = T.mu.point(a);
      if ((x - T.B0.z).squaredNorm() >= r3 * r3) continue;
      if (rec.plane.dist(x) >= se * q.ell) far[a] = 1;
    }
  }
  for (int a = 0; a < mu.size(); ++a)
    if (far[a]) {
      T.far_atoms.push_back(a);
      T.mass_far += T.mu.weight(a);
    }

  // pass 2: BA0 and F0 on Tree0, then maximal cubes of the union
  const double e4 = std::pow(params.eps0, 0.25);
  for (int id : tree0) {
    CubeRecord& rec = T.records[T.record_of[id]];
    rec.ba0 = rec.angle > params.theta;
    double fm = 0.0;
    for (int a : T.mu.atoms_in(cube_ball(L.cube(id), 3.0)))
      if (far[a]) fm += T.mu.weight(a);
    rec.far_fraction = rec.mass3 > 0 ? fm / rec.mass3 : 0.0;
    rec.f0 = !rec.ba0 && rec.far_fraction > e4;
  }
  queue = {root};
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    CubeRecord& rec = T.records[T.record_of[id]];
    const double m = L.cube(id).mass * w;
    if (rec.hd0) rec.label = CubeLabel::HD, T.mass_HD += m;
    else if (rec.ld0) rec.label = CubeLabel::LD, T.mass_LD += m;
    else if (rec.bs0) rec.label = CubeLabel::BS, T.mass_BS += m;
    else if (rec.ba0) rec.label = CubeLabel::BA, T.mass_BA += m;
    else if (rec.f0) rec.label = CubeLabel::F, T.mass_F += m;
    else rec.label = CubeLabel::Tree;
    if (rec.label != CubeLabel::Tree) {
      T.stop.push_back(id);
      continue;
    }
    T.tree.push_back(id);
    for (int c : L.cube(id).children) queue.push_back(c);
  }
  T.mass_R0 = R0.mass * w;
  T.status = T.label(root) == CubeLabel::Tree ? TreeStatus::Ok : TreeStatus::EmptyTree;
  T.bs_constant = T.mass_BS / (params.eps0 * T.mass_R0);
  T.far_constant = T.mass_far / (se * T.mass_R0);

  if (opt.compute_c) {
    parallel_for(static_cast<int>(T.tree.size()), [&](int k) {
      const int id = T.tree[k];
      CubeRecord& rec = T.records[T.record_of[id]];
      rec.c = fit_flat_constant(T.mu, cube_ball(L.cube(id), 3.0), rec.plane, opt.search).c;
      rec.has_c = true;
    });
  }
  return T;
}

std::vector<std::string> check_tree_invariants(const TreeDecomposition& T, const CubeLattice& L) {
  std::vector<std::string> out;
  const StoppingParams& P = T.params;
  std::vector<char> is_stop(L.cubes.size(), 0);
  for (int s : T.stop) is_stop[s] = 1;
  for (int s : T.stop) {
    for (int a = L.cube(s).parent; a >= 0; a = L.cube(a).parent) {
      if (is_stop[a]) out.push_back("stop cube " + std::to_string(s) + " inside stop cube " + std::to_string(a));
      if (a == T.root) break;
    }
    for (int a = s; a != T.root;) {
      a = L.cube(a).parent;
      if (a < 0) {
        out.push_back("stop cube " + std::to_string(s) + " outside the root");
        break;
      }
      if (T.label(a) != CubeLabel::Tree) out.push_back("ancestor " + std::to_string(a) + " of stop cube not in Tree");
    }
  }
  // direct recomputation by linear scan
  const Mat& X = T.mu.points();
  const Vec& W = T.mu.weights();
  std::vector<char> far(T.mu.size(), 0);
  for (int a : T.far_atoms) far[a] = 1;
  for (int id : T.tree) {
    const Cube& q = L.cube(id);
    const CubeRecord* rec = T.record(id);
    const double R = 28.0 * q.r;
    double m3 = 0.0, m15 = 0.0, mf = 0.0;
    for (int i = 0; i < X.cols(); ++i) {
      const double d2 = (X.col(i) - q.z).squaredNorm();
      if (d2 < 9.0 * R * R) {
        m3 += W(i);
        if (far[i]) mf += W(i);
      }
      if (d2 < 2.25 * R * R) m15 += W(i);
    }
    const double en = std::pow(q.ell, T.n);
    const std::string tag = "tree cube " + std::to_string(id) + ": ";
    if (m3 > P.A * en) out.push_back(tag + "high density");
    if (m15 < P.tau * en) out.push_back(tag + "low density");
    if (rec->bad_fraction > 0.5) out.push_back(tag + "bad-set fraction above 1/2");
    if (plane_angle(rec->plane, T.L0) > P.theta) out.push_back(tag + "angle above theta");
    if (mf > std::pow(P.eps0, 0.25) * m3) out.push_back(tag + "far fraction above eps0^(1/4)");
  }
  return out;
}

// ---- balanced balls ------------------------------------------------------------------------

BalancedBallResult balanced_ball_test(const DiscreteMeasure& mu, const Ball& B, double gamma, double rho1,
                                      double rho2, int n, const BalancedBallOptions& opt) {
  BalancedBallResult res;
  const std::vector<int> in = mu.atoms_in(B);
  const double mB = mu.ball_mass(B);
  if (in.empty() || !(mB > 0)) throw Error(ErrorCode::EmptyBall, "balanced-ball test needs mu(B) > 0");
  const double r = B.r, r2 = r * r;
  auto local_mass = [&](const Vec& x, double rad) {
    double m = 0.0;
    for (int a : mu.atoms_in({x, rad}))
      if ((mu.point(a) - B.z).squaredNorm() < r2) m += mu.weight(a);
    return m;
  };

  // alternative (a): greedy spread
  std::vector<double> loc(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) loc[k] = local_mass(mu.point(in[k]), rho1 * r);
  std::size_t x0 = 0;
  for (std::size_t k = 1; k < in.size(); ++k)
    if (loc[k] > loc[x0]) x0 = k;
  res.points.push_back(in[x0]);
  Mat basis(mu.dim(), 0);
  const Vec base = mu.point(in[x0]);
  double min_spread = std::numeric_limits<double>::infinity();
  bool ok = true;
  res.worst_margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= n; ++k) {
    int best = -1;
    double bd = -1.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (loc[j] < rho2 * mB) continue;
      Vec v = mu.point(in[j]) - base;
      if (basis.cols()) v -= basis * (basis.transpose() * v);
      const double dist = v.norm();
      if (dist > bd) bd = dist, best = static_cast<int>(j);
    }
    if (best < 0 || !(bd > 0)) {
      ok = false;
      res.worst_margin = -gamma;
      break;
    }
    // moving y_k costs rho1 r; moving the k base points tilts the span by at most 2 rho1 r / min spread
    // over a lever arm of 2r
    const double slack = k == 1 ? 2.0 * rho1 * r : rho1 * r * (2.0 + 4.0 * r * (k - 1) / min_spread);
    res.points.push_back(in[best]);
    res.spreads.push_back(bd);
    res.slacks.push_back(slack);
    res.worst_margin = std::min(res.worst_margin, (bd - slack) / r - gamma);
    min_spread = std::min(min_spread, bd);
    Vec v = mu.point(in[best]) - base;
    if (basis.cols()) v -= basis * (basis.transpose() * v);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v.normalized();
  }
  if (ok && res.worst_margin >= 0) {
    res.outcome = BalanceOutcome::Balanced;
    return res;
  }

  // alternative (b): 4 gamma r balls with pairwise disjoint 10-fold enlargements
  const double rb = 4.0 * gamma * r;
  const double lift_c = opt.lift_constant < 0 ? 0.5 * std::pow(4.0, -n) : opt.lift_constant;
  const double thetaB = mB / std::pow(r, n);
  std::vector<std::pair<double, int>> order;
  for (int a : in) order.push_back({-mu.ball_mass({mu.point(a), rb}), a});
  std::sort(order.begin(), order.end());
  double fam = 0.0;
  res.min_lift = std::numeric_limits<double>::infinity();
  for (const auto& [neg, a] : order) {
    const double lift = (-neg / std::pow(rb, n)) / thetaB;
    if (lift < lift_c / gamma) break;  // sorted by mass, so no later ball qualifies
    const Vec x = mu.point(a);
    bool clear = true;
    for (const Ball& f : res.family)
      if ((f.z - x).norm() < 20.0 * rb) clear = false;
    if (!clear) continue;
    res.family.push_back({x, rb});
    fam += -neg;
    res.min_lift = std::min(res.min_lift, lift);
  }
  if (res.family.empty()) res.min_lift = order.empty() ? 0.0 : (-order[0].first / std::pow(rb, n)) / thetaB;
  res.family_mass_fraction = fam / mB;
  if (!res.family.empty() && res.family_mass_fraction >= opt.mass_constant)
    res.outcome = BalanceOutcome::Unbalanced;
  return res;
}

}  // namespace flatscan

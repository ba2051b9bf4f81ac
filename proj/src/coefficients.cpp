#include "flatscan/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "flatscan/error.hpp"
#include "flatscan/quadrature.hpp"

namespace flatscan {

const char* kind_name(CoefKind k) {
  switch (k) {
    case CoefKind::BetaP: return "beta_p";
    case CoefKind::BetaHP: return "beta_h_p";
    case CoefKind::Alpha: return "alpha";
    case CoefKind::AlphaH: return "alpha_h";
    case CoefKind::AlphaP: return "alpha_p";
  }
  return "?";
}

CoefKind parse_kind(const std::string& s) {
  if (s == "beta" || s == "beta_p") return CoefKind::BetaP;
  if (s == "beta_h" || s == "beta_h_p") return CoefKind::BetaHP;
  if (s == "alpha") return CoefKind::Alpha;
  if (s == "alpha_h") return CoefKind::AlphaH;
  if (s == "alpha_p") return CoefKind::AlphaP;
  throw Error(ErrorCode::InvalidArgument, "unknown coefficient kind '" + s + "'");
}

// ---- cutoff and scales ------------------------------------------------------

double cutoff(double radius) {
  const double t = std::max(0.0, 3.0 - radius);
  return std::min(1.0, t * t);
}

double cutoff_gradient(double radius) {
  if (radius <= 2.0 || radius >= 3.0) return 0.0;
  return 2.0 * (3.0 - radius);
}

double cutoff_ball(const Ball& b, const Vec& y) { return cutoff((y - b.z).norm() / b.r); }

std::vector<double> ScaleGrid::radii() const {
  if (!(q > 0 && q < 1) || !(r_max > 0) || !(r_min > 0))
    throw Error(ErrorCode::InvalidArgument, "invalid scale grid");
  std::vector<double> out;
  for (int j = 0;; ++j) {
    const double r = r_max * std::pow(q, j);
    if (r < r_min * (1 - 1e-12)) break;
    out.push_back(r);
  }
  return out;
}

double ScaleGrid::step() const { return std::log(1.0 / q); }

double diameter(const DiscreteMeasure& mu) {
  if (mu.size() > 20000) return mu.bbox_diameter();
  double best = 0.0;
  const Mat& p = mu.points();
  for (int i = 0; i < mu.size(); ++i)
    for (int j = i + 1; j < mu.size(); ++j) best = std::max(best, (p.col(i) - p.col(j)).squaredNorm());
  return std::sqrt(best);
}

ScaleGrid ScaleGrid::from_measure(const DiscreteMeasure& mu, double q) {
  ScaleGrid g;
  g.q = q;
  g.r_max = diameter(mu);
  g.r_min = 4.0 * mu.median_nn_distance();
  if (!(g.r_max > 0)) throw Error(ErrorCode::InvalidArgument, "scale grid needs a measure with positive diameter");
  if (!(g.r_min > 0) || g.r_min > g.r_max) g.r_min = g.r_max * q;
  return g;
}

// ---- planes -----------------------------------------------------------------

std::optional<PcaFit> pca_fit(const DiscreteMeasure& mu, const std::vector<int>& atoms, int n) {
  if (atoms.empty()) return std::nullopt;
  const int d = mu.dim();
  if (n < 1 || n > d) throw Error(ErrorCode::InvalidArgument, "plane dimension must satisfy 1 <= n <= d");
  PcaFit f;
  Vec m = Vec::Zero(d);
  for (int i : atoms) {
    m += mu.weight(i) * mu.point(i);
    f.mass += mu.weight(i);
  }
  m /= f.mass;
  Mat cov = Mat::Zero(d, d);
  for (int i : atoms) {
    const Vec y = mu.point(i) - m;
    cov.noalias() += mu.weight(i) * y * y.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const Mat& V = es.eigenvectors();
  f.plane.base = m;
  f.plane.frame.resize(d, n);
  for (int k = 0; k < n; ++k) f.plane.frame.col(k) = V.col(d - 1 - k);
  f.normals = V.leftCols(d - n);
  for (int i : atoms) f.residual += mu.weight(i) * f.plane.perp(mu.point(i)).squaredNorm();
  f.count = static_cast<int>(atoms.size());
  return f;
}

std::vector<AffinePlane> plane_candidates(const PcaFit& seed, double beta2, double r, int K) {
  std::vector<AffinePlane> out{seed.plane};
  const int n = seed.plane.n(), dn = static_cast<int>(seed.normals.cols());
  if (dn == 0) return out;
  const double s = std::clamp(2.0 * beta2, 0.02, 0.5);
  for (int j = 0; j < K; ++j) {
    const int t = j / 2;
    const double sign = (j % 2) ? -1.0 : 1.0;
    const int level = t / 2;
    const double amp = s * std::pow(0.5, level);
    const int fi = level % n, nk = level % dn;
    AffinePlane L = seed.plane;
    if (t % 2 == 0) {
      const double a = sign * amp;
      L.frame.col(fi) = std::cos(a) * seed.plane.frame.col(fi) + std::sin(a) * seed.normals.col(nk);
    } else {
      L.base = seed.plane.base + sign * amp * r * seed.normals.col(nk);
    }
    out.push_back(L);
  }
  return out;
}

namespace {

double lp_sum(const DiscreteMeasure& mu, const std::vector<int>& atoms, const AffinePlane& L, int p) {
  long double s = 0.0L;
  for (int i : atoms) {
    const double dd = L.dist(mu.point(i));
    s += mu.weight(i) * (p == 2 ? dd * dd : dd);
  }
  return static_cast<double>(s);
}

AffinePlane through_point(const Vec& x, int n) {
  AffinePlane L;
  L.base = x;
  L.frame = Mat::Identity(x.size(), n);
  return L;
}

// Local L^1 refinement: reweighted PCA, then rotation/shift descent.
AffinePlane refine_l1(const DiscreteMeasure& mu, const std::vector<int>& atoms, const PcaFit& seed, const Vec& x,
                      double r) {
  AffinePlane best = seed.plane;
  Mat normals = seed.normals;
  double fbest = lp_sum(mu, atoms, best, 1);
  const int d = mu.dim(), n = best.n(), dn = d - n;
  if (dn == 0 || fbest == 0.0) return best;

  for (int it = 0; it < 30; ++it) {
    Vec m = Vec::Zero(d);
    double W = 0.0;
    std::vector<double> w(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      w[k] = mu.weight(atoms[k]) / std::max(best.dist(mu.point(atoms[k])), 1e-9 * r);
      m += w[k] * mu.point(atoms[k]);
      W += w[k];
    }
    m /= W;
    Mat cov = Mat::Zero(d, d);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const Vec y = mu.point(atoms[k]) - m;
      cov.noalias() += w[k] * y * y.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    AffinePlane cand;
    cand.base = m;
    cand.frame.resize(d, n);
    for (int k = 0; k < n; ++k) cand.frame.col(k) = es.eigenvectors().col(d - 1 - k);
    const double fc = lp_sum(mu, atoms, cand, 1);
    if (fc < fbest * (1 - 1e-12) && cand.dist(x) < r) {
      best = cand;
      normals = es.eigenvectors().leftCols(dn);
      fbest = fc;
    } else {
      break;
    }
  }

  double step = 0.05;
  while (step > 1e-7) {
    bool improved = false;
    for (int fi = 0; fi < n; ++fi)
      for (int nk = 0; nk < dn; ++nk)
        for (int kind = 0; kind < 2; ++kind)
          for (double sg : {1.0, -1.0}) {
            AffinePlane c = best;
            Mat cn = normals;
            if (kind == 0) {
              const double a = sg * step;
              c.frame.col(fi) = std::cos(a) * best.frame.col(fi) + std::sin(a) * normals.col(nk);
              cn.col(nk) = -std::sin(a) * best.frame.col(fi) + std::cos(a) * normals.col(nk);
            } else {
              c.base = best.base + sg * step * r * normals.col(nk);
            }
            if (!(c.dist(x) < r)) continue;
            const double fc = lp_sum(mu, atoms, c, 1);
            if (fc < fbest * (1 - 1e-14)) {
              best = c;
              normals = cn;
              fbest = fc;
              improved = true;
            }
          }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

CoefficientResult beta_p(const DiscreteMeasure& mu, const Vec& x, double r, int p, int n) {
  if (p != 1 && p != 2) throw Error(ErrorCode::InvalidArgument, "beta_p implemented for p in {1,2}");
  if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "beta_p needs r > 0");
  CoefficientResult res;
  res.kind = CoefKind::BetaP;
  res.p = p;
  res.ball = {x, r};
  res.mass3 = mu.ball_mass({x, 3 * r});
  if (res.mass3 == 0.0) {
    res.status = CoefStatus::EmptyBall;
    res.value = std::numeric_limits<double>::quiet_NaN();
    res.plane = through_point(x, n);
    return res;
  }
  const auto atoms = mu.atoms_in({x, r});
  auto fit = pca_fit(mu, atoms, n);
  if (!fit) {
    res.plane = through_point(x, n);
    res.value = 0.0;
    return res;
  }
  res.plane = fit->plane;
  if (p == 1) {
    res.plane = refine_l1(mu, atoms, *fit, x, r);
    res.approximate = true;
    res.flags.push_back("l1_local_descent");
    res.value = lp_sum(mu, atoms, res.plane, 1) / (res.mass3 * r);
  } else {
    res.value = std::sqrt(fit->residual / (res.mass3 * r * r));
  }
  return res;
}

double beta_at_plane(const DiscreteMeasure& mu, const Vec& x, double r, int p, const AffinePlane& L) {
  const double m3 = mu.ball_mass({x, 3 * r});
  if (m3 == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double s = lp_sum(mu, mu.atoms_in({x, r}), L, p) / (m3 * std::pow(r, p));
  return std::pow(s, 1.0 / p);
}

CoefficientResult beta_homogeneous(const DiscreteMeasure& mu, const Vec& x, double r, int p, int n) {
  CoefficientResult b = beta_p(mu, x, r, p, n);
  CoefficientResult res = b;
  res.kind = CoefKind::BetaHP;
  res.status = CoefStatus::Ok;
  if (b.status == CoefStatus::EmptyBall) {
    res.value = 0.0;
    return res;
  }
  // direct homogeneous normalization at the witness plane
  const auto atoms = mu.atoms_in({x, r});
  const double direct = std::pow(lp_sum(mu, atoms, b.plane, p) / (std::pow(r, p) * std::pow(r, n)), 1.0 / p);
  const double related = b.value * std::pow(b.mass3 / std::pow(r, n), 1.0 / p);
  res.value = direct;
  res.residual = std::abs(direct - related);
  if (res.residual > 1e-10 * std::max(1.0, direct)) res.flags.push_back("homogeneous_relation_violated");
  return res;
}

// ---- alpha ------------------------------------------------------------------

FlatFit fit_flat_constant(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& L,
                          const PlaneSearchConfig& cfg, const Mat& cell_frame) {
  FlatFit out;
  const double delta = cfg.spacing_factor * b.r;
  const PlaneQuadrature q = flat_quadrature(L, b, delta);
  const auto atoms = mu.atoms_in(b);
  std::vector<int> qin;
  for (int j = 0; j < q.size(); ++j)
    if ((q.nodes.col(j) - b.z).squaredNorm() < b.r * b.r) qin.push_back(j);
  const int m = static_cast<int>(atoms.size()), k = static_cast<int>(qin.size());
  Mat X(mu.dim(), m + k);
  Vec e(m + k), qw(k);
  double mass = 0.0, qmass = 0.0;
  for (int i = 0; i < m; ++i) {
    X.col(i) = mu.point(atoms[i]);
    e(i) = mu.weight(atoms[i]);
    mass += e(i);
  }
  for (int j = 0; j < k; ++j) {
    X.col(m + j) = q.nodes.col(qin[j]);
    qw(j) = q.weights(qin[j]);
    qmass += qw(j);
  }
  FBOptions opt;
  opt.node_cap = cfg.node_cap;
  opt.potentials = false;
  if (cell_frame.size()) {
    opt.cell_frame = cell_frame;
  } else {
    Mat nf = L.normal_frame();
    opt.cell_frame.resize(L.d(), L.d());
    opt.cell_frame << L.frame, nf;
  }

  struct Pt {
    double c, g, s;
  };
  auto eval = [&](double c) {
    for (int j = 0; j < k; ++j) e(m + j) = -c * qw(j);
    FBResult r = f_b_solve(X, e, b, opt);
    double slope = 0.0;
    for (int j = 0; j < k; ++j) {
      const int nd = r.node_of[m + j];
      if (nd >= 0) slope -= qw(j) * r.gradient(nd);
    }
    out.approximate |= r.approximate;
    ++out.evaluations;
    return Pt{c, r.value, slope};
  };

  if (k == 0 || m == 0) {
    // no flat mass or no measure mass inside B: c = 0 is optimal
    Pt p0 = eval(0.0);
    out.value = p0.g;
    out.lower_bound = p0.g;
    out.c = 0.0;
    return out;
  }

  const double c1 = mass / qmass;
  Pt lo = eval(c1), hi = lo;
  if (lo.s > 0) {
    lo = eval(0.5 * c1);
    while (lo.s > 0 && lo.c > 1e-9 * c1) {
      hi = lo;
      lo = eval(0.25 * lo.c);
    }
    if (lo.s > 0) lo = eval(0.0);  // increasing on (0, inf): the infimum sits at c = 0
  } else if (lo.s < 0) {
    hi = eval(2.0 * c1);
    for (int it = 0; hi.s < 0 && it < 60; ++it) {
      lo = hi;
      hi = eval(2.0 * hi.c);
    }
  }
  Pt best = lo.g <= hi.g ? lo : hi;
  double lb = best.g;
  for (int it = 0; it < cfg.max_c_iter; ++it) {
    if (lo.s >= 0 || hi.s <= 0 || hi.c <= lo.c) {
      lb = best.g;
      break;
    }
    double cs = (hi.g - lo.g + lo.s * lo.c - hi.s * hi.c) / (lo.s - hi.s);
    cs = std::clamp(cs, lo.c, hi.c);
    lb = std::min(best.g, lo.g + lo.s * (cs - lo.c));
    if (best.g - lb <= cfg.c_tol * best.g || best.g - lb <= 1e-15) break;
    if (cs <= lo.c || cs >= hi.c) break;
    Pt mid = eval(cs);
    if (mid.g < best.g) best = mid;
    if (mid.s < 0) lo = mid;
    else if (mid.s > 0) hi = mid;
    else {
      lb = mid.g;
      break;
    }
  }
  out.value = best.g;
  out.c = best.c;
  out.lower_bound = lb;
  return out;
}

namespace {

// With at most n atoms in B the principal axes are not determined by B alone; the axes then
// come from 3B and the plane is moved to pass through the centroid of B.
PcaFit seed_fit(const DiscreteMeasure& mu, const Ball& b, int n) {
  auto fit = pca_fit(mu, mu.atoms_in(b), n);
  if (!fit || fit->count <= n) {
    auto wide = pca_fit(mu, mu.atoms_in(b.scaled(3.0)), n);
    if (!wide) throw Error(ErrorCode::EmptyBall, "no atoms in 3B");
    if (fit) {
      wide->plane.base = fit->plane.base;
      wide->residual = 0.0;
      for (int i : mu.atoms_in(b)) wide->residual += mu.weight(i) * wide->plane.perp(mu.point(i)).squaredNorm();
    }
    fit = wide;
  }
  const int d = mu.dim();
  if (d - n >= 2) {
    // the complement eigenvectors of B alone are often degenerate; order them by the spread of 3B
    const auto atoms3 = mu.atoms_in(b.scaled(3.0));
    double m = 0.0;
    Vec c = Vec::Zero(d);
    for (int i : atoms3) {
      m += mu.weight(i);
      c += mu.weight(i) * mu.point(i);
    }
    c /= m;
    Mat cov = Mat::Zero(d, d);
    for (int i : atoms3) {
      const Vec y = fit->plane.perp(mu.point(i) - c + fit->plane.base);
      cov.noalias() += mu.weight(i) * y * y.transpose();
    }
    const Mat& F = fit->plane.frame;
    cov -= (cov.trace() + 1.0) * F * F.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    fit->normals = es.eigenvectors().rightCols(d - n);
  }
  return *fit;
}

// Principal axes of the seed: rotates with the data, so cell grids do too.
Mat seed_frame(const PcaFit& seed) {
  Mat f(seed.plane.d(), seed.plane.d());
  f << seed.plane.frame, seed.normals;
  return f;
}

}  // namespace

CoefficientResult alpha(const DiscreteMeasure& mu, const Ball& b, int n, const PlaneSearchConfig& cfg) {
  CoefficientResult res;
  res.kind = CoefKind::Alpha;
  res.p = 1;
  res.ball = b;
  res.mass3 = mu.ball_mass(b.scaled(3.0));
  res.quadrature_spacing = cfg.spacing_factor * b.r;
  if (res.mass3 == 0.0) {
    res.status = CoefStatus::EmptyBall;
    res.value = std::numeric_limits<double>::quiet_NaN();
    res.plane = through_point(b.z, n);
    return res;
  }
  const PcaFit seed = seed_fit(mu, b, n);
  const double beta2 = std::sqrt(seed.residual / (res.mass3 * b.r * b.r));
  double best = std::numeric_limits<double>::infinity();
  const Mat frame = seed_frame(seed);
  for (const AffinePlane& L : plane_candidates(seed, beta2, b.r, cfg.K)) {
    FlatFit f = fit_flat_constant(mu, b, L, cfg, frame);
    res.approximate |= f.approximate;
    if (f.value < best) {
      best = f.value;
      res.plane = L;
      res.c = f.c;
      res.residual = f.value - f.lower_bound;
    }
  }
  if (res.approximate) res.flags.push_back("fb_nodes_aggregated");
  res.flags.push_back("plane_search_upper_bound");
  res.value = best / (b.r * res.mass3);
  return res;
}

CoefficientResult alpha_homogeneous(const DiscreteMeasure& mu, const Vec& x, double r, int n,
                                    const PlaneSearchConfig& cfg) {
  CoefficientResult res = alpha(mu, {x, r}, n, cfg);
  res.kind = CoefKind::AlphaH;
  if (res.status == CoefStatus::Ok) res.value *= res.mass3 / std::pow(r, n);
  return res;
}

namespace {

// integral over L of phi_B, by radial Simpson quadrature
double flat_cutoff_integral(const Ball& b, const AffinePlane& L) {
  const int n = L.n();
  const double h = L.dist(b.z) / b.r;
  if (h >= 3.0) return 0.0;
  const double rho = std::sqrt(9.0 - h * h);
  const int N = 4000;
  const double dt = rho / N;
  const double sphere = n * unit_ball_volume(n);
  double s = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double t = i * dt;
    const double f = cutoff(std::sqrt(t * t + h * h)) * std::pow(t, n - 1);
    s += f * ((i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return sphere * s * dt / 3.0 * std::pow(b.r, n);
}

// Replace the atoms by weighted centroids of cells of side h about z(B), h grown until <= cap cells.
void merge_cells(LocalizedPair& lp, const Ball& b, const Mat& frame, std::size_t cap, int p) {
  const int d = static_cast<int>(lp.x.rows());
  const Mat F = frame.size() ? frame : Mat::Identity(d, d);
  const Mat w = F.transpose() * (lp.x.colwise() - b.z);
  double h = 6.0 * b.r / static_cast<double>(cap);
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
  Mat x(d, cells.size());
  Vec a(cells.size());
  double err = 0.0;
  int k = 0;
  for (const auto& [key, members] : cells) {
    double m = 0.0;
    Vec c = Vec::Zero(d);
    for (int i : members) {
      m += lp.a(i);
      c += lp.a(i) * lp.x.col(i);
    }
    c /= m;
    for (int i : members) err += lp.a(i) * std::pow((lp.x.col(i) - c).norm(), p);
    x.col(k) = c;
    a(k++) = m;
  }
  lp.x = std::move(x);
  lp.a = std::move(a);
  lp.aggregation_error = std::pow(err, 1.0 / p);
}

}  // namespace

LocalizedPair localized_pair(const DiscreteMeasure& mu, const Ball& b, const AffinePlane& L, double delta,
                             std::size_t cap, const Mat& cell_frame, int p) {
  LocalizedPair lp;
  const auto atoms = mu.atoms_in(b.scaled(3.0));
  std::vector<int> keep;
  std::vector<double> w;
  for (int i : atoms) {
    const double f = cutoff_ball(b, mu.point(i));
    if (f > 0) {
      keep.push_back(i);
      w.push_back(mu.weight(i) * f);
    }
  }
  lp.x.resize(mu.dim(), keep.size());
  lp.a.resize(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    lp.x.col(k) = mu.point(keep[k]);
    lp.a(k) = w[k];
  }
  if (cap > 0 && keep.size() > cap) merge_cells(lp, b, cell_frame, cap, p);
  const PlaneQuadrature q = flat_quadrature(L, b, delta);
  std::vector<int> qk;
  std::vector<double> qw;
  for (int j = 0; j < q.size(); ++j) {
    const double f = cutoff_ball(b, q.nodes.col(j));
    if (f > 0) {
      qk.push_back(j);
      qw.push_back(q.weights(j) * f);
    }
  }
  lp.y.resize(mu.dim(), qk.size());
  lp.b.resize(qk.size());
  double qsum = 0.0;
  for (std::size_t k = 0; k < qk.size(); ++k) {
    lp.y.col(k) = q.nodes.col(qk[k]);
    lp.b(k) = qw[k];
    qsum += qw[k];
  }
  const double msum = lp.a.sum();
  if (qsum > 0) {
    lp.a_BL = msum / qsum;
    lp.b *= lp.a_BL;
    const double exact = flat_cutoff_integral(b, L);
    lp.quadrature_error = exact > 0 ? qsum / exact - 1.0 : 0.0;
  }
  return lp;
}

CoefficientResult alpha_p(const DiscreteMeasure& mu, const Ball& b, int p, int n, const PlaneSearchConfig& cfg) {
  if (p != 1 && p != 2) throw Error(ErrorCode::InvalidArgument, "alpha_p implemented for p in {1,2}");
  CoefficientResult res;
  res.kind = CoefKind::AlphaP;
  res.p = p;
  res.ball = b;
  res.mass3 = mu.ball_mass(b.scaled(3.0));
  res.quadrature_spacing = cfg.spacing_factor * b.r;
  if (res.mass3 == 0.0) {
    res.status = CoefStatus::EmptyBall;
    res.value = std::numeric_limits<double>::quiet_NaN();
    res.plane = through_point(b.z, n);
    return res;
  }
  const PcaFit seed = seed_fit(mu, b, n);
  const double beta2 = std::sqrt(seed.residual / (res.mass3 * b.r * b.r));
  auto cands = plane_candidates(seed, beta2, b.r, cfg.K);
  const Mat frame = seed_frame(seed);
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  double agg_error = 0.0;
  for (int pass = 0; pass < 2 && !any; ++pass) {
    if (pass == 1) cands = {seed.plane.rebased(b.z)};
    for (const AffinePlane& L : cands) {
      if (!(L.dist(b.z) < b.r)) continue;
      LocalizedPair lp = localized_pair(mu, b, L, res.quadrature_spacing, cfg.transport_cap, frame, p);
      if (lp.b.size() == 0) continue;
      any = true;
      WassersteinResult w = wasserstein(lp.x, lp.a, lp.y, lp.b, p);
      if (w.value < best) {
        best = w.value;
        res.plane = L;
        res.c = lp.a_BL;
        res.quadrature_error = lp.quadrature_error;
        res.residual = std::max(w.duality_gap, w.marginal_residual);
        res.approximate = lp.aggregation_error > 0;
        agg_error = lp.aggregation_error;
        res.plan = std::move(w.plan);
      }
    }
  }
  if (res.approximate) res.flags.push_back("atoms_aggregated");
  res.flags.push_back("plane_search_upper_bound");
  res.value = best / (b.r * std::pow(res.mass3, 1.0 / p));
  res.aggregation_error = agg_error / (b.r * std::pow(res.mass3, 1.0 / p));
  return res;
}

CoefficientResult coefficient(CoefKind kind, const DiscreteMeasure& mu, const Vec& x, double r, int p, int n,
                              const PlaneSearchConfig& cfg) {
  switch (kind) {
    case CoefKind::BetaP: return beta_p(mu, x, r, p, n);
    case CoefKind::BetaHP: return beta_homogeneous(mu, x, r, p, n);
    case CoefKind::Alpha: return alpha(mu, {x, r}, n, cfg);
    case CoefKind::AlphaH: return alpha_homogeneous(mu, x, r, n, cfg);
    case CoefKind::AlphaP: return alpha_p(mu, {x, r}, p, n, cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown coefficient kind");
}

SquareFunction square_function(const DiscreteMeasure& mu, const Vec& x, const ScaleGrid& grid, CoefKind kind, int p,
                               int n, const PlaneSearchConfig& cfg) {
  SquareFunction sf;
  sf.radii = grid.radii();
  const double step = grid.step();
  for (double r : sf.radii) {
    CoefficientResult c = coefficient(kind, mu, x, r, p, n, cfg);
    if (!c.defined()) {
      sf.trace.push_back(std::numeric_limits<double>::quiet_NaN());
      ++sf.undefined;
      continue;
    }
    sf.trace.push_back(c.value);
    sf.value += c.value * c.value * step;
  }
  return sf;
}

// ---- good set -------------------------------------------------------------------

GoodSet good_set(const DiscreteMeasure& mu, double eps, double r, int n, const GoodSetOptions& opt) {
  if (!(opt.r_lo > 0)) throw Error(ErrorCode::InvalidArgument, "good_set needs a positive lower scale r_lo");
  GoodSet gs;
  gs.eps = eps;
  gs.r = r;
  gs.atoms = opt.atoms;
  if (gs.atoms.empty())
    for (int i = 0; i < mu.size(); ++i) gs.atoms.push_back(i);
  double upper = 1000.0 * r;
  if (opt.r_cap > 0 && upper > opt.r_cap) {
    upper = opt.r_cap;
    gs.truncated = true;
  }
  for (double s = upper; s > opt.r_lo; s *= opt.q) gs.radii.push_back(s);
  const double step = std::log(1.0 / opt.q);
  const double eps2 = eps * eps;
  const int N = static_cast<int>(gs.atoms.size());
  gs.good.assign(N, 0);
  gs.integral.assign(N, 0.0);
  gs.lower_bound.assign(N, 0);
  gs.shared_alpha = opt.net_divisor > 0;

  // beta_2 part, exact per atom
  std::vector<char> alive(N, 1);
  for (int k = 0; k < N; ++k) {
    const Vec x = mu.point(gs.atoms[k]);
    for (double s : gs.radii) {
      const double b = beta_p(mu, x, s, 2, n).value;
      gs.integral[k] += b * b * step;
    }
    if (opt.early_exit && !(gs.integral[k] < eps2)) {
      alive[k] = 0;
      gs.lower_bound[k] = 1;
    }
  }

  // alpha part, coarse scales first, optionally shared on a net of each scale
  for (double s : gs.radii) {
    std::vector<int> center_of(N, -1);
    std::vector<int> centers;
    if (gs.shared_alpha) {
      const double sp2 = std::pow(s / opt.net_divisor, 2);
      for (int k = 0; k < N; ++k) {
        const Vec x = mu.point(gs.atoms[k]);
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
          const double d2 = (mu.point(gs.atoms[centers[c]]) - x).squaredNorm();
          if (d2 < bd) bd = d2, best = c;
        }
        if (best < 0 || bd >= sp2) {
          centers.push_back(k);
          best = static_cast<int>(centers.size()) - 1;
        }
        center_of[k] = centers[best];
      }
    } else {
      for (int k = 0; k < N; ++k) center_of[k] = k;
    }
    std::vector<double> cache(N, -1.0);
    for (int k = 0; k < N; ++k) {
      if (!alive[k]) continue;
      const int c = center_of[k];
      if (cache[c] < 0) {
        const CoefficientResult a = alpha(mu, {mu.point(gs.atoms[c]), s}, n, opt.search);
        cache[c] = a.defined() ? a.value : 0.0;
        ++gs.alpha_evaluations;
      }
      gs.integral[k] += cache[c] * cache[c] * step;
      if (opt.early_exit && !(gs.integral[k] < eps2)) {
        alive[k] = 0;
        gs.lower_bound[k] = 1;
      }
    }
  }
  for (int k = 0; k < N; ++k) {
    gs.good[k] = gs.integral[k] < eps2;
    const double w = mu.weight(gs.atoms[k]);
    gs.total_mass += w;
    if (gs.good[k]) gs.good_mass += w;
  }
  return gs;
}

}  // namespace flatscan

#include "flatscan/generators.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "flatscan/error.hpp"

namespace flatscan {

double unit_uniform(std::uint64_t& s) {
  // splitmix64
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

namespace {

double to_double(const std::string& k, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (...) {
    pos = 0;
  }
  if (pos != v.size()) throw Error(ErrorCode::InvalidArgument, "bad value for " + k + ": '" + v + "'");
  return x;
}

int to_int(const std::string& k, const std::string& v) {
  const double x = to_double(k, v);
  if (x != std::floor(x)) throw Error(ErrorCode::InvalidArgument, k + " must be an integer");
  return static_cast<int>(x);
}

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

DiscreteMeasure flat_plane(const GeneratorSpec& s) {
  const int side = std::max(1, static_cast<int>(std::lround(std::pow(s.count, 1.0 / s.n))));
  const double h = s.extent / side;
  long total = 1;
  for (int k = 0; k < s.n; ++k) total *= side;
  Mat p = Mat::Zero(s.d, total);
  Vec w = Vec::Constant(total, std::pow(h, s.n));
  for (long idx = 0; idx < total; ++idx) {
    long r = idx;
    for (int k = s.n - 1; k >= 0; --k) {
      p(k, idx) = (static_cast<double>(r % side) + 0.5) * h - 0.5 * s.extent;
      r /= side;
    }
  }
  return DiscreteMeasure(std::move(p), std::move(w));
}

struct Modes {
  std::vector<std::vector<int>> k;
  std::vector<double> c, phase;
  double A = 0.0;
};

Modes graph_modes(const GeneratorSpec& s) {
  std::uint64_t st = s.seed * 7919 + 17;
  Modes m;
  double csum = 0.0, grad = 0.0;
  for (int j = 0; j < s.modes; ++j) {
    std::vector<int> kv(s.n, 0);
    for (int t = 0; t < s.n; ++t) kv[t] = (t == j % s.n) ? 1 + j / s.n : static_cast<int>(3 * unit_uniform(st));
    const double c = 0.5 + unit_uniform(st);
    m.k.push_back(kv);
    m.c.push_back(c);
    m.phase.push_back(2 * std::numbers::pi * unit_uniform(st));
    csum += c;
  }
  for (int j = 0; j < s.modes; ++j) {
    m.c[j] /= csum;
    double kn = 0;
    for (int t : m.k[j]) kn += double(t) * t;
    grad += m.c[j] * 2 * std::numbers::pi * std::sqrt(kn) / s.extent;
  }
  m.A = s.lipschitz / grad;  // |grad f| <= A * grad
  if (s.amplitude > 0) m.A = std::min(m.A, s.amplitude);
  return m;
}

DiscreteMeasure lipschitz_graph(const GeneratorSpec& s) {
  if (s.d <= s.n) throw Error(ErrorCode::InvalidArgument, "lipschitz_graph needs d > n");
  const Modes m = graph_modes(s);
  DiscreteMeasure base = flat_plane(s);
  Mat p = base.points();
  Vec w = base.weights();
  const double h = std::pow(w(0), 1.0 / s.n);
  auto value_grad = [&](const Vec& u, Vec& g) {
    double f = 0.0;
    g = Vec::Zero(s.n);
    for (int j = 0; j < s.modes; ++j) {
      double arg = m.phase[j];
      for (int t = 0; t < s.n; ++t) arg += 2 * std::numbers::pi * m.k[j][t] * u(t) / s.extent;
      f += m.A * m.c[j] * std::sin(arg);
      for (int t = 0; t < s.n; ++t)
        g(t) += m.A * m.c[j] * std::cos(arg) * 2 * std::numbers::pi * m.k[j][t] / s.extent;
    }
    return f;
  };
  for (int i = 0; i < p.cols(); ++i) {
    Vec u = p.col(i).head(s.n), g;
    p(s.n, i) = value_grad(u, g);
    if (s.n == 1) {
      // trapezoid rule on the arclength element over the cell
      Vec a = u, b = u, ga, gb;
      a(0) -= 0.5 * h;
      b(0) += 0.5 * h;
      value_grad(a, ga);
      value_grad(b, gb);
      w(i) = h * 0.5 * (std::sqrt(1 + ga.squaredNorm()) + std::sqrt(1 + gb.squaredNorm()));
    } else {
      // bilinear-patch corners averaged
      double acc = 0.0;
      for (int c = 0; c < (1 << s.n); ++c) {
        Vec v = u, gv;
        for (int t = 0; t < s.n; ++t) v(t) += ((c >> t) & 1 ? 0.5 : -0.5) * h;
        value_grad(v, gv);
        acc += std::sqrt(1 + gv.squaredNorm());
      }
      w(i) = std::pow(h, s.n) * acc / (1 << s.n);
    }
  }
  return DiscreteMeasure(std::move(p), std::move(w));
}

DiscreteMeasure circle_arc(const GeneratorSpec& s) {
  Mat p = Mat::Zero(s.d, s.count);
  const double dt = s.arc / s.count;
  for (int i = 0; i < s.count; ++i) {
    const double t = (i + 0.5) * dt - 0.5 * s.arc;
    p(0, i) = s.radius * std::cos(t);
    p(1, i) = s.radius * std::sin(t);
  }
  return DiscreteMeasure(std::move(p), Vec::Constant(s.count, s.radius * dt));
}

DiscreteMeasure cantor4(const GeneratorSpec& s) {
  if (s.d != 2) throw Error(ErrorCode::InvalidArgument, "cantor4 lives in the plane (d = 2)");
  if (s.depth < 0 || s.depth > 10) throw Error(ErrorCode::InvalidArgument, "cantor4 depth must be in [0, 10]");
  const long N = 1L << (2 * s.depth);
  Mat p(2, N);
  for (long idx = 0; idx < N; ++idx) {
    double x = 0.0, y = 0.0, side = 1.0;
    for (int j = 0; j < s.depth; ++j) {
      const int digit = static_cast<int>((idx >> (2 * (s.depth - 1 - j))) & 3);
      x += (digit & 1) * 0.75 * side;
      y += ((digit >> 1) & 1) * 0.75 * side;
      side *= 0.25;
    }
    p(0, idx) = x + 0.5 * side;
    p(1, idx) = y + 0.5 * side;
  }
  return DiscreteMeasure(std::move(p), Vec::Constant(N, std::pow(0.25, s.depth)));
}

DiscreteMeasure two_lines(const GeneratorSpec& s) {
  Mat p = Mat::Zero(s.d, 2 * s.count);
  const double h = s.extent / s.count;
  for (int i = 0; i < s.count; ++i) {
    const double t = (i + 0.5) * h - 0.5 * s.extent;
    p(0, i) = t;
    p(0, s.count + i) = t * std::cos(s.angle);
    p(1, s.count + i) = t * std::sin(s.angle);
  }
  return DiscreteMeasure(std::move(p), Vec::Constant(2 * s.count, h));
}

DiscreteMeasure plane_plus_spike(const GeneratorSpec& s) {
  DiscreteMeasure base = flat_plane(s);
  Mat p(s.d, base.size() + 1);
  Vec w(base.size() + 1);
  p.leftCols(base.size()) = base.points();
  w.head(base.size()) = base.weights();
  p.col(base.size()).setZero();
  p(s.n, base.size()) = s.spike_height;
  w(base.size()) = s.spike_weight * base.weight(0);
  return DiscreteMeasure(std::move(p), std::move(w));
}

}  // namespace

DiscreteMeasure generate(const GeneratorSpec& s) {
  if (s.n < 1 || s.d < s.n || s.d > 16) throw Error(ErrorCode::InvalidArgument, "need 1 <= n <= d <= 16");
  if (s.count < 1) throw Error(ErrorCode::InvalidArgument, "count must be positive");
  if (!(s.extent > 0)) throw Error(ErrorCode::InvalidArgument, "extent must be positive");
  if (s.kind == "flat_plane") return flat_plane(s);
  if (s.kind == "lipschitz_graph") return lipschitz_graph(s);
  if (s.kind == "circle_arc") return circle_arc(s);
  if (s.kind == "cantor4") return cantor4(s);
  if (s.kind == "two_lines") {
    if (s.d < 2) throw Error(ErrorCode::InvalidArgument, "two_lines needs d >= 2");
    return two_lines(s);
  }
  if (s.kind == "plane_plus_spike") return plane_plus_spike(s);
  if (s.kind == "rescaled") {
    if (s.base == "rescaled") throw Error(ErrorCode::InvalidArgument, "rescaled cannot wrap itself");
    if (!(s.scale > 0) || !(s.mass_scale > 0)) throw Error(ErrorCode::InvalidArgument, "scales must be positive");
    GeneratorSpec inner = s;
    inner.kind = s.base;
    DiscreteMeasure mu = generate(inner);
    Mat R = Mat::Identity(s.d, s.d);
    if (s.d >= 2) {
      R(0, 0) = std::cos(s.rotation);
      R(0, 1) = -std::sin(s.rotation);
      R(1, 0) = std::sin(s.rotation);
      R(1, 1) = std::cos(s.rotation);
    }
    return mu.transformed(R, Vec::Constant(s.d, s.shift), s.scale).mass_scaled(s.mass_scale);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown generator kind '" + s.kind + "'");
}

void GeneratorSpec::set(const std::string& k, const std::string& v) {
  if (k == "kind") kind = v;
  else if (k == "n") n = to_int(k, v);
  else if (k == "d") d = to_int(k, v);
  else if (k == "count") count = to_int(k, v);
  else if (k == "depth") depth = to_int(k, v);
  else if (k == "extent") extent = to_double(k, v);
  else if (k == "lipschitz") lipschitz = to_double(k, v);
  else if (k == "amplitude") amplitude = to_double(k, v);
  else if (k == "modes") modes = to_int(k, v);
  else if (k == "radius") radius = to_double(k, v);
  else if (k == "arc") arc = to_double(k, v);
  else if (k == "angle") angle = to_double(k, v);
  else if (k == "spike_weight") spike_weight = to_double(k, v);
  else if (k == "spike_height") spike_height = to_double(k, v);
  else if (k == "base") base = v;
  else if (k == "scale") scale = to_double(k, v);
  else if (k == "mass_scale") mass_scale = to_double(k, v);
  else if (k == "rotation") rotation = to_double(k, v);
  else if (k == "shift") shift = to_double(k, v);
  else if (k == "seed") seed = static_cast<std::uint64_t>(to_int(k, v));
  else throw Error(ErrorCode::InvalidArgument, "unknown generator parameter '" + k + "'");
}

std::map<std::string, std::string> GeneratorSpec::to_map() const {
  return {{"kind", kind},
          {"n", std::to_string(n)},
          {"d", std::to_string(d)},
          {"count", std::to_string(count)},
          {"depth", std::to_string(depth)},
          {"extent", fmt(extent)},
          {"lipschitz", fmt(lipschitz)},
          {"amplitude", fmt(amplitude)},
          {"modes", std::to_string(modes)},
          {"radius", fmt(radius)},
          {"arc", fmt(arc)},
          {"angle", fmt(angle)},
          {"spike_weight", fmt(spike_weight)},
          {"spike_height", fmt(spike_height)},
          {"base", base},
          {"scale", fmt(scale)},
          {"mass_scale", fmt(mass_scale)},
          {"rotation", fmt(rotation)},
          {"shift", fmt(shift)},
          {"seed", std::to_string(seed)}};
}

}  // namespace flatscan

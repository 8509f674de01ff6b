#include "pmx/frozen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmx/fft.hpp"
#include "pmx/quad.hpp"

namespace pmx::frozen {

using model::LevyTypeModel;

namespace {

double one_minus_cos(double x) {
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s;
}

// log-log cubic (Catmull-Rom) lookup table for the 2d radial base symbol
struct RadialTable {
  double lr0 = 0, dlr = 1;
  std::vector<double> lq;
  double operator()(double r) const {
    const double u = (std::log(r) - lr0) / dlr;
    const int j = std::clamp(static_cast<int>(std::floor(u)), 1, static_cast<int>(lq.size()) - 3);
    const double s = u - j;
    const double a = lq[j - 1], b = lq[j], c = lq[j + 1], d = lq[j + 2];
    const double v = b + 0.5 * s * (c - a + s * (2 * a - 5 * b + 4 * c - d + s * (3 * (b - c) + d - a)));
    return std::exp(v);
  }
};

}  // namespace

SymbolTable build_symbol_table(const LevyTypeModel& model, const SpatialGrid& grid) {
  if (!fft::is_pow2(grid.n)) throw PmxError(ErrorCode::CONFIG_INVALID, "grid size must be a power of two");
  SymbolTable tab;
  tab.grid = grid;
  tab.separable = !model.modulation.u_dependent();
  if (!tab.separable) return tab;
  const int n = grid.n;
  tab.re.assign(grid.size(), 0.0);
  tab.im.assign(grid.size(), 0.0);

  if (grid.dim == 1) {
    // conjugate symmetry: density part is even, atom sin part odd
    std::vector<double> qd(n / 2 + 1, 0.0);
    for (int k = 1; k <= n / 2; ++k) qd[k] = model::q_base_density(model.base, std::numbers::pi / grid.R * k);
    for (int k = 0; k < n; ++k) {
      const double xi = grid.freq(k);
      double re = qd[std::abs(k < n / 2 ? k : k - n)];
      double im = 0;
      for (const auto& a : model.base.atoms) {
        const double d = xi * a.u[0];
        const double comp = std::abs(a.u[0]) <= 1.0 ? d : 0.0;
        re += a.w * one_minus_cos(d);
        im += a.w * (comp - std::sin(d));
      }
      tab.re[k] = re;
      tab.im[k] = im;
    }
  } else {
    RadialTable rt;
    const double rmin = std::numbers::pi / grid.R, rmax = rmin * n;  // covers |k'| sqrt(2) n/2
    const int pts = 200;
    rt.lr0 = std::log(rmin);
    rt.dlr = (std::log(rmax) - rt.lr0) / (pts - 1);
    rt.lq.resize(pts);
    for (int i = 0; i < pts; ++i)
      rt.lq[i] = std::log(model::q_base_density(model.base, std::exp(rt.lr0 + i * rt.dlr)));
    for (int k0 = 0; k0 < n; ++k0)
      for (int k1 = 0; k1 < n; ++k1) {
        const Point xi = pt(grid.freq(k0), grid.freq(k1));
        const double r = norm(xi, 2);
        double re = r > 0 ? rt(r) : 0.0;
        double im = 0;
        for (const auto& a : model.base.atoms) {
          const double d = dot(xi, a.u, 2);
          const double comp = norm(a.u, 2) <= 1.0 ? d : 0.0;
          re += a.w * one_minus_cos(d);
          im += a.w * (comp - std::sin(d));
        }
        tab.re[k0 * n + k1] = re;
        tab.im[k0 * n + k1] = im;
      }
  }
  return tab;
}

namespace {

// Inverse transform of mult(k) * e^{-t q(y, xi_k)} at the offset-grid points.
std::vector<double> inverse_transform(const LevyTypeModel& model, const SymbolTable& tab, double t,
                                      const Point& y,
                                      const std::function<std::complex<double>(int)>& mult,
                                      bool check, const char* what) {
  const SpatialGrid& g = tab.grid;
  const int n = g.n;
  fft::cvec a(g.size());
  double decay = 0;  // t * Re q at the worst dual node
  if (tab.separable) {
    const double my = model.modulation(y, pt(0), g.dim);
    const Point dr = model.drift(y);
    for (int flat = 0; flat < g.size(); ++flat) {
      const int k0 = g.dim == 1 ? flat : flat / n;
      const int k1 = g.dim == 1 ? 0 : flat % n;
      const Point xi = g.dim == 1 ? pt(g.freq(k0)) : pt(g.freq(k0), g.freq(k1));
      const std::complex<double> q(my * tab.re[flat], my * tab.im[flat] - dot(dr, xi, g.dim));
      const double parity = ((k0 + k1) % 2 == 0) ? 1.0 : -1.0;
      a[flat] = parity * std::exp(-t * q) * mult(flat);
      if (flat == (g.dim == 1 ? n / 2 : (n / 2) * n + n / 2)) decay = t * my * tab.re[flat];
    }
  } else {
    if (g.dim != 1)
      throw PmxError(ErrorCode::CONFIG_INVALID, "u-dependent modulation supported in 1D only");
    std::vector<std::complex<double>> q(n / 2 + 1);
    for (int k = 0; k <= n / 2; ++k) q[k] = model::q_exponent(model, y, pt(std::numbers::pi / g.R * k));
    for (int k = 0; k < n; ++k) {
      const int kk = k < n / 2 ? k : k - n;
      const std::complex<double> qk = kk >= 0 ? q[kk] : std::conj(q[-kk]);
      a[k] = (k % 2 == 0 ? 1.0 : -1.0) * std::exp(-t * qk) * mult(k);
      if (k == n / 2) decay = t * qk.real();
    }
  }
  if (check && decay < 23.0)
    throw PmxError(ErrorCode::GRID_UNDERRESOLVED,
                   std::string(what) + ": symbol decay t*q(Nyquist) = " + std::to_string(decay) + " < 23");
  if (g.dim == 1)
    fft::transform(a, -1);
  else
    fft::transform2d(a, n, n, -1);
  const double scale = std::pow(1.0 / (2.0 * g.R), g.dim);
  std::vector<double> out(g.size());
  for (int i = 0; i < g.size(); ++i) out[i] = scale * a[i].real();
  return out;
}

}  // namespace

std::vector<double> frozen_density(const LevyTypeModel& model, const SymbolTable& tab, double t,
                                   const Point& y, bool check) {
  auto out = inverse_transform(model, tab, t, y, [](int) { return std::complex<double>(1.0); },
                               check, "frozen_density");
  if (check) {
    double mx = 0, mn = 0;
    for (double v : out) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
    if (mn < -1e-6 * mx)
      throw PmxError(ErrorCode::GRID_UNDERRESOLVED,
                     "frozen_density: negative lobe " + std::to_string(mn / mx));
  }
  return out;
}

std::vector<double> frozen_gradient(const LevyTypeModel& model, const SymbolTable& tab, double t,
                                    const Point& y, int axis) {
  const SpatialGrid& g = tab.grid;
  return inverse_transform(
      model, tab, t, y,
      [&](int flat) {
        const double xi = g.dim == 1 ? g.freq(flat) : (axis == 0 ? g.freq(flat / g.n) : g.freq(flat % g.n));
        return std::complex<double>(0.0, -xi);
      },
      false, "frozen_gradient");
}

std::vector<double> frozen_base_generator(const LevyTypeModel& model, const SymbolTable& tab,
                                          double t, const Point& y) {
  if (!tab.separable)
    throw PmxError(ErrorCode::CONFIG_INVALID, "frozen_base_generator needs a separable symbol");
  return inverse_transform(
      model, tab, t, y,
      [&](int flat) { return -std::complex<double>(tab.re[flat], tab.im[flat]); }, false,
      "frozen_base_generator");
}

// ---------------------------------------------------------------------------
// GridFunction
// ---------------------------------------------------------------------------

GridFunction GridFunction::sampled(const SpatialGrid& g, std::vector<double> v) {
  if (static_cast<int>(v.size()) != g.size())
    throw PmxError(ErrorCode::GRID_MISMATCH, "GridFunction: value count does not match grid");
  GridFunction f;
  f.grid = &g;
  f.values = std::move(v);
  return f;
}

GridFunction GridFunction::sampled_periodic(const SpatialGrid& g, std::vector<double> v) {
  GridFunction f = sampled(g, std::move(v));
  f.periodic = true;
  double s = 0;
  for (double x : f.values) s += x;
  f.mean = s / f.values.size();
  return f;
}

GridFunction GridFunction::of(std::function<double(const Point&)> f) {
  GridFunction g;
  g.fn = std::move(f);
  return g;
}

double GridFunction::operator()(const Point& x) const {
  if (analytic()) return fn(x);
  const SpatialGrid& g = *grid;
  if (g.dim != 1)
    throw PmxError(ErrorCode::CONFIG_INVALID, "sampled GridFunction interpolation is 1D only");
  const double u = (x[0] + g.R) / g.h();
  const int j = static_cast<int>(std::floor(u));
  const double s = u - j;
  auto at = [&](int i) {
    if (periodic) return values[((i % g.n) + g.n) % g.n];
    return (i >= 0 && i < g.n) ? values[i] : 0.0;
  };
  const double a = at(j - 1), b = at(j), c = at(j + 1), d = at(j + 2);
  return b + 0.5 * s * (c - a + s * (2 * a - 5 * b + 4 * c - d + s * (3 * (b - c) + d - a)));
}

// ---------------------------------------------------------------------------
// Generator application
// ---------------------------------------------------------------------------

double apply_generator(const LevyTypeModel& model, const GridFunction& f, const Point& x,
                       const Point& y, bool frozen, double fd_step) {
  const int n = model.dim();
  const Point& c = frozen ? y : x;  // coefficient freeze point
  const auto& base = model.base;
  const double h = fd_step;
  const double fx = f(x);

  double val = 0;
  // directional first derivatives for drift and compensator
  Point grad{};
  for (int ax = 0; ax < n; ++ax) {
    Point xp = x, xm = x;
    xp[ax] += h;
    xm[ax] -= h;
    grad[ax] = (f(xp) - f(xm)) / (2 * h);
  }
  const Point dr = model.drift(c);
  val += dot(dr, grad, n);

  const bool per = !f.analytic() && f.periodic;
  if (base.has_density()) {
    const double r0 = 2.0 * h;
    double sup = std::min(base.support_radius(), base.quad.r_out);
    // periodic fields: resolve one extra period, then use the period mean
    if (per) sup = std::min(sup, 2.0 * f.grid->R);
    const int nrays = n == 1 ? 2 : base.quad.angles;
    const double wray = n == 1 ? 1.0 : 2 * std::numbers::pi / base.quad.angles;
    for (int a = 0; a < nrays; ++a) {
      Point d{};
      if (n == 1)
        d[0] = a == 0 ? 1.0 : -1.0;
      else {
        const double phi = 2 * std::numbers::pi * (a + 0.5) / nrays;
        d = pt(std::cos(phi), std::sin(phi));
      }
      // small jumps: second-order Taylor along the ray
      Point xp = x, xm = x;
      for (int ax = 0; ax < n; ++ax) {
        xp[ax] += h * d[ax];
        xm[ax] -= h * d[ax];
      }
      const double sec = (f(xp) - 2 * fx + f(xm)) / (h * h);
      const double mr0 = model.modulation(c, pt(0.5 * r0 * d[0], 0.5 * r0 * d[1]), n);
      val += wray * 0.5 * sec * mr0 * base.ray_second_moment_head(std::min(r0, sup));
      if (sup <= r0) continue;
      // body
      const quad::Rule rule = quad::geometric_composite(r0, sup, base.quad.ratio, -1, base.quad.pts);
      const double gd = dot(d, grad, n);
      double acc = 0;
      for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double s = rule.x[i];
        const Point u = pt(s * d[0], s * d[1]);
        const Point xu = pt(x[0] + u[0], x[1] + u[1]);
        const double comp = s <= 1.0 ? s * gd : 0.0;
        acc += rule.w[i] * (f(xu) - fx - comp) * model.modulation(c, u, n) *
               base.radial_density(s) * std::pow(s, n - 1);
      }
      val += wray * acc;
      // beyond the outer cutoff f contributes its mean (zero unless periodic)
      const double mtail = model.modulation(c, pt(sup * d[0], sup * d[1]), n);
      const double fbar = per ? f.mean : 0.0;
      val += wray * (fbar - fx) * mtail * base.ray_mass(sup, std::numeric_limits<double>::infinity());
    }
  }
  for (const auto& a : base.atoms) {
    const Point xu = pt(x[0] + a.u[0], x[1] + a.u[1]);
    const double comp = norm(a.u, n) <= 1.0 ? dot(a.u, grad, n) : 0.0;
    val += a.w * model.modulation(c, a.u, n) * (f(xu) - fx - comp);
  }
  return val;
}

}  // namespace pmx::frozen

#include "pmx/quad.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmx::quad {

void Rule::append(const Rule& other) {
  x.insert(x.end(), other.x.begin(), other.x.end());
  w.insert(w.end(), other.w.begin(), other.w.end());
}

double Rule::integrate(const std::function<double(double)>& f) const {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
  return s;
}

Rule gauss_legendre(int n) {
  // Newton iteration on Legendre polynomials, nodes symmetric about 0.
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  return r;
}

Rule gauss_legendre(int n, double a, double b) {
  Rule base = gauss_legendre(n);
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    r.x[i] = mid + half * base.x[i];
    r.w[i] = half * base.w[i];
  }
  return r;
}

Rule geometric_composite(double a, double b, double ratio, double max_len, int pts) {
  if (!(a > 0) || !(b > a) || !(ratio > 1))
    throw std::invalid_argument("geometric_composite: need 0<a<b, ratio>1");
  Rule r;
  double lo = a;
  while (lo < b) {
    double len = lo * (ratio - 1.0);
    if (max_len > 0 && len > max_len) len = max_len;
    double hi = lo + len;
    if (hi > b) hi = b;
    r.append(gauss_legendre(pts, lo, hi));
    lo = hi;
  }
  return r;
}

Rule singular_power_rule(double t, double delta, int pts) {
  // s = t * tau^p, p = 1/(1-delta); ds = t p tau^{p-1} dtau.
  const double p = 1.0 / (1.0 - delta);
  Rule base = gauss_legendre(pts, 0.0, 1.0);
  Rule r;
  r.x.resize(pts);
  r.w.resize(pts);
  for (int i = 0; i < pts; ++i) {
    const double tau = base.x[i];
    r.x[i] = t * std::pow(tau, p);
    r.w[i] = base.w[i] * t * p * std::pow(tau, p - 1.0);
  }
  return r;
}

Rule singular_power_rule_both(double t, double delta, int pts) {
  Rule lower = singular_power_rule(t / 2, delta, pts);
  Rule upper = singular_power_rule(t / 2, delta, pts);
  // reflect the upper half: s -> t - s
  for (auto& s : upper.x) s = t - s;
  lower.append(upper);
  return lower;
}

}  // namespace pmx::quad

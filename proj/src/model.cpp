#include "pmx/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pmx/quad.hpp"

namespace pmx::model {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1 - cos(x) without cancellation; essential against nu ~ u^{-n-alpha}.
double one_minus_cos(double x) {
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s;
}

double one_minus_j0(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return x2 / 4.0 - x2 * x2 / 64.0;
  }
  return 1.0 - std::cyl_bessel_j(0.0, x);
}

// Subinterval list on [a,b]: geometric growth with `ratio`, length capped at
// `cap` (ignored if cap <= 0), with mandatory breakpoints.
std::vector<std::pair<double, double>> make_intervals(double a, double b, double ratio, double cap,
                                                      std::vector<double> breaks) {
  std::vector<std::pair<double, double>> out;
  if (!(b > a)) return out;
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double lo = a;
  for (double br : breaks) {
    if (br <= lo || br > b) continue;
    double x = lo;
    while (x < br) {
      double len = x * (ratio - 1.0);
      if (cap > 0 && len > cap) len = cap;
      double hi = std::min(x + len, br);
      out.emplace_back(x, hi);
      x = hi;
    }
    lo = br;
  }
  return out;
}

double integrate_intervals(const std::vector<std::pair<double, double>>& iv, int pts,
                           const std::function<double(double)>& f) {
  const quad::Rule base = quad::gauss_legendre(pts);
  double total = 0;
  for (auto [a, b] : iv) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0;
    for (std::size_t i = 0; i < base.x.size(); ++i) s += base.w[i] * f(mid + half * base.x[i]);
    total += half * s;
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// LevyBaseMeasure
// ---------------------------------------------------------------------------

double LevyBaseMeasure::radial_density(double r) const {
  const auto& d = density;
  switch (d.kind) {
    case DensityKind::NONE: return 0;
    case DensityKind::POWER: return d.scale * std::pow(r, -double(dim) - d.alpha);
    case DensityKind::TRUNCATED_POWER:
      return r <= d.cutoff ? d.scale * std::pow(r, -double(dim) - d.alpha) : 0.0;
    case DensityKind::TEMPERED_POWER:
      return d.scale * std::pow(r, -double(dim) - d.alpha) * std::exp(-d.kappa * r);
  }
  return 0;
}

double LevyBaseMeasure::radial_density_deriv(double r) const {
  const auto& d = density;
  const double p = -double(dim) - d.alpha;
  switch (d.kind) {
    case DensityKind::NONE: return 0;
    case DensityKind::POWER: return d.scale * p * std::pow(r, p - 1.0);
    case DensityKind::TRUNCATED_POWER:
      return r <= d.cutoff ? d.scale * p * std::pow(r, p - 1.0) : 0.0;
    case DensityKind::TEMPERED_POWER:
      return d.scale * std::exp(-d.kappa * r) * (p * std::pow(r, p - 1.0) - d.kappa * std::pow(r, p));
  }
  return 0;
}

double LevyBaseMeasure::support_radius() const {
  if (density.kind == DensityKind::TRUNCATED_POWER) return density.cutoff;
  if (density.kind == DensityKind::NONE) return 0;
  return kInf;
}

double LevyBaseMeasure::ray_mass(double a, double b) const {
  const auto& d = density;
  if (d.kind == DensityKind::NONE || !(b > a)) return 0;
  const double al = d.alpha;
  switch (d.kind) {
    case DensityKind::POWER: {
      const double hi = std::isinf(b) ? 0.0 : std::pow(b, -al);
      return d.scale / al * (std::pow(a, -al) - hi);
    }
    case DensityKind::TRUNCATED_POWER: {
      const double bb = std::min(b, d.cutoff);
      if (bb <= a) return 0;
      return d.scale / al * (std::pow(a, -al) - std::pow(bb, -al));
    }
    case DensityKind::TEMPERED_POWER: {
      // integrand nu(s) s^{n-1} = scale * s^{-1-al} e^{-kappa s}
      double bb = std::min(b, a + 80.0 / d.kappa);
      bb = std::min(bb, std::max(a * 1.0001, 80.0 / d.kappa));
      if (std::isinf(b)) b = bb;
      b = std::min(b, bb);
      if (b <= a) return 0;
      auto iv = make_intervals(a, b, 1.3, -1, {});
      return integrate_intervals(iv, 8, [&](double s) {
        return d.scale * std::pow(s, -1.0 - al) * std::exp(-d.kappa * s);
      });
    }
    default: return 0;
  }
}

double LevyBaseMeasure::ray_second_moment_head(double eps) const {
  const auto& d = density;
  if (d.kind == DensityKind::NONE) return 0;
  const double al = d.alpha;
  // \int_0^eps s^{2} nu(s) s^{n-1} ds = scale \int_0^eps s^{1-al} [e^{-kappa s}] ds
  if (d.kind == DensityKind::TEMPERED_POWER && d.kappa * eps > 1e-8) {
    const double e0 = eps * 1e-9;
    const double head = d.scale * std::pow(e0, 2.0 - al) / (2.0 - al);
    auto iv = make_intervals(e0, eps, 1.3, -1, {});
    return head + integrate_intervals(iv, 8, [&](double s) {
      return d.scale * std::pow(s, 1.0 - al) * std::exp(-d.kappa * s);
    });
  }
  const double ee = (d.kind == DensityKind::TRUNCATED_POWER) ? std::min(eps, d.cutoff) : eps;
  return d.scale * std::pow(ee, 2.0 - al) / (2.0 - al);
}

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

double ModulationField::operator()(const Point& x, const Point& u, int n) const {
  switch (kind) {
    case ModulationKind::CONSTANT: return m0;
    case ModulationKind::BUMP: return m0 + c * std::min(1.0, norm(x, n));
    case ModulationKind::CUSTOM: return custom(x, u);
  }
  return m0;
}

Point DriftField::operator()(const Point&) const {
  if (kind == DriftKind::ZERO) return {0, 0};
  return a0;
}

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

namespace {

// One-ray integral of ((p s)^2 ∧ 1) nu(s) s^{n-1} ds for projection p >= 0,
// together with its truncated-second-moment part (the q^L integrand).
// Returns {full, second_moment_part}.
std::pair<double, double> ray_qu_ql(const LevyBaseMeasure& base, double p, int pts_override = 0) {
  if (p <= 0 || !base.has_density()) return {0, 0};
  const auto& q = base.quad;
  const int pts = pts_override > 0 ? pts_override : q.pts;
  const double ustar = 1.0 / p;
  const double sup = std::min(base.support_radius(), q.r_out);
  const double eps = std::min(q.eps_in, 0.1 * ustar);
  const double head = p * p * base.ray_second_moment_head(eps);

  double i2 = 0;  // \int_eps^{ustar ∧ sup} s^2 nu s^{n-1}
  const double b2 = std::min(ustar, sup);
  if (b2 > eps) {
    auto iv = make_intervals(eps, b2, q.ratio, -1, {});
    i2 = integrate_intervals(iv, pts, [&](double s) {
      return s * s * base.radial_density(s) * std::pow(s, base.dim - 1);
    });
  }
  double i0 = 0;  // \int_{ustar}^{sup} nu s^{n-1} plus analytic tail
  if (sup > ustar) {
    const double bodyb = std::min(sup, std::max(ustar * 4.0, 16.0));
    auto iv = make_intervals(ustar, bodyb, q.ratio, -1, {});
    i0 = integrate_intervals(iv, pts, [&](double s) {
      return base.radial_density(s) * std::pow(s, base.dim - 1);
    });
    i0 += base.ray_mass(bodyb, kInf);
  }
  const double ql = head + p * p * i2;
  return {ql + i0, ql};
}

}  // namespace

std::pair<double, double> q_upper_lower(const LevyBaseMeasure& base, const Point& xi) {
  const int n = base.dim;
  const double r = norm(xi, n);
  double qu = 0, ql = 0;
  if (r > 0 && base.has_density()) {
    if (n == 1) {
      auto [f, s] = ray_qu_ql(base, r);
      qu = 2 * f;
      ql = 2 * s;
    } else {
      const int na = base.quad.angles;
      const double dphi = 2 * std::numbers::pi / na;
      const double phix = std::atan2(xi[1], xi[0]);
      for (int j = 0; j < na; ++j) {
        const double p = std::abs(r * std::cos(phix - (j + 0.5) * dphi));
        auto [f, s] = ray_qu_ql(base, p);
        qu += dphi * f;
        ql += dphi * s;
      }
    }
  }
  for (const auto& a : base.atoms) {
    const double d = dot(xi, a.u, n);
    qu += a.w * std::min(d * d, 1.0);
    if (std::abs(d) <= 1.0) ql += a.w * d * d;
  }
  return {qu, ql};
}

double q_star(const LevyBaseMeasure& base, double r) {
  if (r <= 0) return 0;
  if (base.dim == 1) {
    const double a = q_upper_lower(base, pt(r)).first;
    const double b = q_upper_lower(base, pt(-r)).first;
    return std::max(a, b);
  }
  const int na = base.quad.angles;
  double best = 0;
  for (int j = 0; j < na; ++j) {
    const double phi = 2 * std::numbers::pi * j / na;
    best = std::max(best, q_upper_lower(base, pt(r * std::cos(phi), r * std::sin(phi))).first);
  }
  return best;
}

namespace {

// 1D density part of 2*\int_0^inf (1-cos(xi u)) nu(u) du (both rays).
double q_base_density_1d(const LevyBaseMeasure& base, double xi, int pts) {
  if (xi == 0 || !base.has_density()) return 0;
  const auto& q = base.quad;
  const double sup = std::min(base.support_radius(), q.r_out);
  const double eps = std::min(q.eps_in, 0.02 / xi);
  // head: 1 - cos(xi u) ~ (xi u)^2 / 2
  double val = 0.5 * xi * xi * base.ray_second_moment_head(eps);
  const double body_end = std::min(sup, q.osc_span / xi);
  if (body_end > eps) {
    const double cap = q.osc_wavelengths * 2 * std::numbers::pi / xi;
    auto iv = make_intervals(eps, body_end, q.ratio, cap, {});
    val += integrate_intervals(iv, pts,
                               [&](double u) { return one_minus_cos(xi * u) * base.radial_density(u); });
  }
  if (body_end < sup && xi * body_end > 5.0) {
    // stationary-phase style endpoint correction for the dropped cosine tail
    val += base.ray_mass(body_end, kInf) + std::sin(xi * body_end) * base.radial_density(body_end) / xi +
           std::cos(xi * body_end) * base.radial_density_deriv(body_end) / (xi * xi);
  } else if (body_end < sup) {
    val += base.ray_mass(body_end, kInf);  // 1-cos averages to ~1 is wrong here but tail is tiny
  }
  return 2.0 * val;
}

// 2D isotropic density part: 2*pi*\int_0^inf (1 - J0(s rho)) nu(s) s ds.
double q_base_density_2d(const LevyBaseMeasure& base, double rho, int pts) {
  if (rho == 0 || !base.has_density()) return 0;
  const auto& q = base.quad;
  const double sup = std::min(base.support_radius(), q.r_out);
  const double eps = std::min(q.eps_in, 0.02 / rho);
  double val = 0.25 * rho * rho * base.ray_second_moment_head(eps);
  const double body_end = std::min(sup, q.osc_span / rho);
  if (body_end > eps) {
    const double cap = q.osc_wavelengths * 2 * std::numbers::pi / rho;
    auto iv = make_intervals(eps, body_end, q.ratio, cap, {});
    val += integrate_intervals(iv, pts, [&](double s) {
      return one_minus_j0(s * rho) * base.radial_density(s) * s;
    });
  }
  if (body_end < sup) val += base.ray_mass(body_end, kInf);
  return 2 * std::numbers::pi * val;
}

std::complex<double> q_exponent_impl(const LevyTypeModel& model, const Point& y, const Point& xi,
                                     int pts) {
  const int n = model.dim();
  const double r = norm(xi, n);
  std::complex<double> val(0, 0);
  const auto& base = model.base;
  if (base.has_density()) {
    if (!model.modulation.u_dependent()) {
      const double my = model.modulation(y, pt(0), n);
      const double qd = (n == 1) ? q_base_density_1d(base, r, pts) : q_base_density_2d(base, r, pts);
      val += my * qd;
    } else {
      if (n != 1)
        throw PmxError(ErrorCode::CONFIG_INVALID, "u-dependent modulation supported in 1D only");
      const auto& q = base.quad;
      const double xia = std::abs(xi[0]);
      const double sup = std::min(base.support_radius(), q.r_out);
      const double eps = xia > 0 ? std::min(q.eps_in, 0.02 / xia) : q.eps_in;
      const double mp = model.modulation(y, pt(eps), 1), mm = model.modulation(y, pt(-eps), 1);
      std::complex<double> acc = 0.25 * xi[0] * xi[0] * base.ray_second_moment_head(eps) * (mp + mm);
      const double body_end = xia > 0 ? std::min(sup, q.osc_span / xia) : sup;
      if (body_end > eps) {
        const double cap = xia > 0 ? q.osc_wavelengths * 2 * std::numbers::pi / xia : -1;
        auto iv = make_intervals(eps, body_end, q.ratio, cap, {});
        const quad::Rule gl = quad::gauss_legendre(pts);
        for (auto [a, b] : iv) {
          const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
          for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const double u = mid + half * gl.x[i];
            const double w = half * gl.w[i] * base.radial_density(u);
            const double mu_p = model.modulation(y, pt(u), 1);
            const double mu_m = model.modulation(y, pt(-u), 1);
            const double comp = (u <= 1.0) ? xi[0] * u : 0.0;
            // (1 - e^{i xi u} + i xi u 1) m(+u)  +  (1 - e^{-i xi u} - i xi u 1) m(-u)
            acc += w * std::complex<double>(one_minus_cos(xi[0] * u) * (mu_p + mu_m),
                                            (comp - std::sin(xi[0] * u)) * (mu_p - mu_m));
          }
        }
      }
      if (body_end < sup) {
        const double mb = 0.5 * (model.modulation(y, pt(body_end), 1) + model.modulation(y, pt(-body_end), 1));
        acc += mb * base.ray_mass(body_end, kInf) * 2.0;
        if (xia * body_end > 5.0)
          acc += mb * 2.0 *
                 (std::sin(xia * body_end) * base.radial_density(body_end) / xia +
                  std::cos(xia * body_end) * base.radial_density_deriv(body_end) / (xia * xia));
      }
      val += acc;
    }
  }
  for (const auto& a : base.atoms) {
    const double m = model.modulation(y, a.u, n);
    const double d = dot(xi, a.u, n);
    const double comp = (norm(a.u, n) <= 1.0) ? d : 0.0;
    val += a.w * m * std::complex<double>(one_minus_cos(d), comp - std::sin(d));
  }
  const Point a = model.drift(y);
  val += std::complex<double>(0.0, -dot(a, xi, n));
  return val;
}

}  // namespace

double q_base_density(const LevyBaseMeasure& base, double xi_norm) {
  return base.dim == 1 ? q_base_density_1d(base, xi_norm, base.quad.pts)
                       : q_base_density_2d(base, xi_norm, base.quad.pts);
}

std::complex<double> q_exponent(const LevyTypeModel& model, const Point& y, const Point& xi,
                                bool refine, double rel_tol) {
  const auto v = q_exponent_impl(model, y, xi, model.base.quad.pts);
  if (refine) {
    const auto v2 = q_exponent_impl(model, y, xi, model.base.quad.pts + 6);
    const double scale = std::max({std::abs(v), std::abs(v2), 1e-300});
    if (std::abs(v - v2) > rel_tol * scale + 1e-14)
      throw PmxError(ErrorCode::QUADRATURE_UNRESOLVED,
                     "q_exponent refinement disagreement at |xi|=" + std::to_string(norm(xi, model.dim())));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Scale profile
// ---------------------------------------------------------------------------

double ScaleProfile::rho(double t) const {
  if (!(t > 0)) throw PmxError(ErrorCode::CONFIG_INVALID, "rho: t must be positive");
  const double target = 1.0 / t;
  double lo = 1.0, hi = 1.0;
  int guard = 0;
  while (pmx::model::q_star(base, hi) < target) {
    hi *= 2.0;
    if (++guard > 60)
      throw PmxError(ErrorCode::RHO_UNDEFINED, "q* saturates below 1/t (compound Poisson degeneracy)");
  }
  guard = 0;
  while (pmx::model::q_star(base, lo) > target) {
    lo /= 2.0;
    if (++guard > 120) break;
  }
  while ((hi - lo) > bisect_tol * hi) {
    const double mid = std::sqrt(lo * hi);
    if (pmx::model::q_star(base, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::array<double, 4> fit_exponents(ScaleProfile& profile) {
  const auto& ts = profile.t_ladder;
  const auto& rhos = profile.rho_table;
  const double alpha = 2.0 / profile.beta_declared;
  double c1 = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) c1 = std::max(c1, rhos[i] * std::pow(ts[i], 1.0 / alpha));
  // empirical growth exponent: slope of log(rho) against log(1/t)
  std::vector<double> inv_t(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) inv_t[i] = 1.0 / ts[i];
  const double slope = loglog_slope(inv_t, rhos);
  const double sigma_emp = slope > 1e-9 ? 1.0 / slope : 2.0;
  double sigma = alpha;
  for (double cand = alpha; cand < 1.95; cand += 0.05) {
    sigma = cand;
    if (cand >= sigma_emp - 0.024) break;
  }
  double c2 = kInf;
  for (std::size_t i = 0; i < ts.size(); ++i) c2 = std::min(c2, rhos[i] * std::pow(ts[i], 1.0 / sigma));
  profile.alpha = alpha;
  profile.sigma = sigma;
  profile.c1 = c1;
  profile.c2 = c2;
  return {alpha, sigma, c1, c2};
}

ScaleProfile build_profile(const LevyTypeModel& model, double t_min, int pts_per_decade) {
  ScaleProfile p;
  p.base = model.base;
  p.beta_declared = model.beta;
  const int decades_pts = static_cast<int>(std::round(std::log10(1.0 / t_min) * pts_per_decade));
  for (int i = 0; i <= decades_pts; ++i) {
    const double t = std::pow(10.0, -std::log10(1.0 / t_min) + double(i) * std::log10(1.0 / t_min) / decades_pts);
    p.t_ladder.push_back(t);
  }
  for (double t : p.t_ladder) p.rho_table.push_back(p.rho(t));
  fit_exponents(p);
  return p;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

SamplePlan SamplePlan::standard(int dim) {
  SamplePlan plan;
  for (int i = 0; i <= 32; ++i) plan.r_grid.push_back(std::pow(10.0, -1.0 + 5.0 * i / 32.0));
  plan.directions = dim == 1 ? 2 : 64;
  for (int i = -4; i <= 4; ++i) {
    plan.x_samples.push_back(pt(0.6 * i, dim == 2 ? 0.3 * i : 0.0));
  }
  for (double u : {-3.0, -1.0, -0.3, -0.05, 0.05, 0.3, 1.0, 3.0})
    plan.u_samples.push_back(pt(u, dim == 2 ? 0.5 * u : 0.0));
  return plan;
}

ValidationReport validate_model(const LevyTypeModel& model, const SamplePlan& plan) {
  ValidationReport rep;
  const int n = model.dim();
  const auto& mod = model.modulation;

  // Levy integrability constant of the base measure (times the A2 upper bound).
  {
    double v = 0;
    if (model.base.has_density()) {
      const double eps = model.base.quad.eps_in;
      double ray = model.base.ray_second_moment_head(eps);
      auto iv = make_intervals(eps, 1.0, model.base.quad.ratio, -1, {});
      ray += integrate_intervals(iv, model.base.quad.pts, [&](double s) {
        return s * s * model.base.radial_density(s) * std::pow(s, n - 1);
      });
      ray += model.base.ray_mass(1.0, kInf);
      v = (n == 1 ? 2.0 : 2 * std::numbers::pi) * ray;
    }
    for (const auto& a : model.base.atoms) {
      const double r2 = dot(a.u, a.u, n);
      v += a.w * std::min(r2, 1.0);
    }
    rep.levy_integral = v * mod.b2;
  }

  // A1: sup_l q^U(rl) <= beta inf_l q^L(rl) for large r; q* unbounded.
  {
    std::vector<double> large_r, qstars;
    int violations = 0, considered = 0;
    bool unbounded_ratio = false;
    double beta_hat = 0;
    for (double r : plan.r_grid) {
      double qu_sup = 0, ql_inf = kInf;
      for (int j = 0; j < plan.directions; ++j) {
        const double phi = 2 * std::numbers::pi * j / plan.directions;
        const Point xi = n == 1 ? pt(j % 2 == 0 ? r : -r) : pt(r * std::cos(phi), r * std::sin(phi));
        auto [qu, ql] = q_upper_lower(model.base, xi);
        qu_sup = std::max(qu_sup, qu);
        ql_inf = std::min(ql_inf, ql);
      }
      if (r < 1.0) continue;  // A1 checked for r >= 1 ("large enough")
      ++considered;
      large_r.push_back(r);
      qstars.push_back(qu_sup);
      if (ql_inf <= 0) {
        unbounded_ratio = true;
        ++violations;
        continue;
      }
      const double ratio = qu_sup / ql_inf;
      beta_hat = std::max(beta_hat, ratio);
      if (ratio > model.beta * (1.0 + 1e-6)) ++violations;
    }
    rep.beta_hat = unbounded_ratio ? kInf : beta_hat;
    rep.qstar_growth = large_r.size() >= 2 ? loglog_slope(large_r, qstars) : 0.0;
    rep.a1 = !unbounded_ratio && violations * 4 <= considered && rep.qstar_growth > 0.05;
    if (!rep.a1) rep.failures.push_back("FAILS_A1");
  }

  // A2
  {
    bool ok = true;
    for (const auto& x : plan.x_samples)
      for (const auto& u : plan.u_samples) {
        const double m = mod(x, u, n);
        if (!(m >= mod.b1 - 1e-12 && m <= mod.b2 + 1e-12)) ok = false;
      }
    rep.a2 = ok;
    if (!ok) rep.failures.push_back("FAILS_A2");
  }

  // A3
  {
    bool ok = true;
    const double lam = mod.lambda_holder;
    for (const auto& x : plan.x_samples)
      for (const auto& y : plan.x_samples) {
        if (x == y) continue;
        Point d{x[0] - y[0], x[1] - y[1]};
        const double bound = mod.b3 * std::min(std::pow(norm(d, n), lam), 1.0);
        const Point ax = model.drift(x), ay = model.drift(y);
        Point da{ax[0] - ay[0], ax[1] - ay[1]};
        for (const auto& u : plan.u_samples) {
          const double lhs = norm(da, n) + std::abs(mod(x, u, n) - mod(y, u, n));
          if (lhs > bound * (1.0 + 1e-9) + 1e-12) ok = false;
        }
      }
    rep.a3 = ok;
    if (!ok) rep.failures.push_back("FAILS_A3");
  }

  // symmetry and drift restrictions for alpha <= 1
  if (model.alpha() <= 1.0) {
    bool sym = model.symmetric;
    // isotropic density selectors are symmetric; atoms must pair up
    for (const auto& a : model.base.atoms) {
      bool found = false;
      for (const auto& b : model.base.atoms) {
        bool neg = true;
        for (int i = 0; i < n; ++i)
          if (std::abs(a.u[i] + b.u[i]) > 1e-12) neg = false;
        if (neg && std::abs(a.w - b.w) < 1e-12) found = true;
      }
      if (!found) sym = false;
    }
    for (const auto& u : plan.u_samples) {
      for (const auto& x : plan.x_samples) {
        Point mu{-u[0], -u[1]};
        if (std::abs(mod(x, u, n) - mod(x, mu, n)) > 1e-12) sym = false;
      }
    }
    rep.symmetry_ok = sym;
    if (!sym) rep.failures.push_back("FAILS_SYMMETRY");
    bool drift_zero = true;
    for (const auto& x : plan.x_samples)
      if (norm(model.drift(x), n) > 0) drift_zero = false;
    rep.drift_ok = drift_zero;
    if (!drift_zero) rep.failures.push_back("FAILS_DRIFT_RESTRICTION");
  }

  rep.passed = rep.a1 && rep.a2 && rep.a3 && rep.symmetry_ok && rep.drift_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

LevyTypeModel make_stable_model(int dim, double alpha, double scale) {
  LevyTypeModel m;
  m.base.dim = dim;
  m.base.density = {DensityKind::POWER, alpha, scale, 1.0, 1.0};
  m.beta = 2.0 / alpha;
  m.symmetric = true;
  m.modulation.kind = ModulationKind::CONSTANT;
  m.modulation.m0 = 1.0;
  m.modulation.b1 = m.modulation.b2 = 1.0;
  m.modulation.b3 = 0.0;
  m.modulation.lambda_holder = std::min(1.0, alpha);
  return m;
}

LevyTypeModel make_modulated_stable_model(double alpha, double bump, double lambda_holder) {
  LevyTypeModel m = make_stable_model(1, alpha);
  m.modulation.kind = ModulationKind::BUMP;
  m.modulation.m0 = 1.0;
  m.modulation.c = bump;
  m.modulation.b1 = 1.0;
  m.modulation.b2 = 1.0 + bump;
  m.modulation.b3 = bump;
  m.modulation.lambda_holder = lambda_holder;
  return m;
}

LevyTypeModel make_truncated_stable_model(double alpha, double cutoff) {
  LevyTypeModel m = make_stable_model(1, alpha);
  m.base.density.kind = DensityKind::TRUNCATED_POWER;
  m.base.density.cutoff = cutoff;
  return m;
}

}  // namespace pmx::model

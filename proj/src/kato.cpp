#include "pmx/kato.hpp"

#include <algorithm>
#include <cmath>

#include "pmx/quad.hpp"

namespace pmx::kato {

using model::ScaleProfile;

// ---------------------------------------------------------------------------
// MeasureSpec
// ---------------------------------------------------------------------------

double MeasureSpec::mass() const {
  double m = 0;
  for (const auto& a : atoms) m += a.second;
  if (density == DensityPart::UNIFORM) m += d_value * (d_hi - d_lo);
  return m;
}

double MeasureSpec::ball_mass(double x, double r) const {
  double m = 0;
  for (const auto& a : atoms)
    if (std::abs(a.first - x) <= r) m += a.second;
  if (density == DensityPart::UNIFORM) {
    const double lo = std::max(d_lo, x - r), hi = std::min(d_hi, x + r);
    if (hi > lo) m += d_value * (hi - lo);
  }
  return m;
}

MeasureSpec make_point_mass(double x, double w) {
  MeasureSpec s;
  s.atoms = {{x, w}};
  return s;
}

MeasureSpec make_uniform_measure(double lo, double hi, double value) {
  MeasureSpec s;
  s.density = DensityPart::UNIFORM;
  s.d_lo = lo;
  s.d_hi = hi;
  s.d_value = value;
  return s;
}

MeasureSpec make_cantor_measure(int depth) {
  MeasureSpec s;
  std::vector<double> lefts = {0.0};
  double len = 1.0;
  for (int k = 0; k < depth; ++k) {
    std::vector<double> next;
    next.reserve(lefts.size() * 2);
    len /= 3.0;
    for (double l : lefts) {
      next.push_back(l);
      next.push_back(l + 2 * len);
    }
    lefts = std::move(next);
  }
  const double w = 1.0 / lefts.size();
  for (double l : lefts) s.atoms.push_back({l + len / 2, w});
  return s;
}

std::vector<double> default_x_samples(const MeasureSpec& spec, int grid_pts) {
  std::vector<double> xs;
  double lo = 0, hi = 0;
  bool any = false;
  // every atom location matters for the sup only up to clustering; cap at 64
  const std::size_t stride = std::max<std::size_t>(1, spec.atoms.size() / 64);
  for (std::size_t i = 0; i < spec.atoms.size(); i += stride) {
    const double ax = spec.atoms[i].first;
    xs.push_back(ax);
    lo = any ? std::min(lo, ax) : ax;
    hi = any ? std::max(hi, ax) : ax;
    any = true;
  }
  if (!spec.atoms.empty()) {
    lo = std::min(lo, spec.atoms.front().first);
    hi = std::max(hi, spec.atoms.back().first);
  }
  if (spec.density == DensityPart::UNIFORM) {
    lo = any ? std::min(lo, spec.d_lo) : spec.d_lo;
    hi = any ? std::max(hi, spec.d_hi) : spec.d_hi;
    any = true;
  }
  if (!any) return {0.0};
  lo -= 1;
  hi += 1;
  for (int i = 0; i < grid_pts; ++i) xs.push_back(lo + (hi - lo) * i / (grid_pts - 1));
  return xs;
}

// ---------------------------------------------------------------------------
// U and criteria
// ---------------------------------------------------------------------------

double u_potential(const ScaleProfile& profile, double r) {
  if (r >= 1.0) return 0.0;
  const int n = profile.base.dim;
  const auto rule = quad::geometric_composite(1.0, 1.0 / r, 1.5, -1, 8);
  double acc = 0;
  for (std::size_t i = 0; i < rule.x.size(); ++i)
    acc += rule.w[i] * std::pow(rule.x[i], n - 1) / profile.q_star(rule.x[i]);
  return acc;
}

double u_potential_deriv(const ScaleProfile& profile, double r) {
  const int n = profile.base.dim;
  return -1.0 / (std::pow(r, n + 1) * profile.q_star(1.0 / r));
}

namespace {

// A convergent cutoff ladder has geometrically shrinking increments; a
// logarithmically divergent one has (roughly) constant increments.  Compare
// the last increment against the one three steps earlier.
bool ladder_divergent(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 6) return false;
  const double d_last = v[n - 1] - v[n - 2];
  const double d_prev = v[n - 4] - v[n - 5];
  if (d_last <= 1e-10 * (1 + std::abs(v.back()))) return false;
  return d_last > 0.5 * d_prev;
}

constexpr int kLadderMin = 3, kLadderMax = 30;

// U(r) cached on a log-r grid (q* quadrature is too costly to call per node);
// cubic interpolation, exact for the log-divergent case.
struct UTable {
  const ScaleProfile& profile;
  double l_min;                // log of the smallest tabulated r
  double h;
  std::vector<double> vals;    // U(exp(l_min + i h)), last node at r = 1

  UTable(const ScaleProfile& pr, double r_min) : profile(pr) {
    h = std::log(2.0) / 8;
    const int m = std::max(4, static_cast<int>(std::ceil(-std::log(r_min) / h)) + 1);
    l_min = -m * h;
    vals.assign(m + 1, 0.0);
    // cumulative: U(r_i) = U(r_{i+1}) + int over one log segment of s^{n-1}/q*
    const int n = pr.base.dim;
    for (int i = m - 1; i >= 0; --i) {
      const double a = std::exp(-(l_min + (i + 1) * h)), b = std::exp(-(l_min + i * h));
      const auto rule = quad::gauss_legendre(8, a, b);
      double seg = 0;
      for (std::size_t k = 0; k < rule.x.size(); ++k)
        seg += rule.w[k] * std::pow(rule.x[k], n - 1) / pr.q_star(rule.x[k]);
      vals[i] = vals[i + 1] + seg;
    }
  }

  double operator()(double r) const {
    if (r >= 1.0) return 0.0;
    const double l = std::log(r);
    if (l <= l_min) return u_potential(profile, r);
    int i = static_cast<int>((l - l_min) / h);
    i = std::clamp(i, 1, static_cast<int>(vals.size()) - 3);
    const double x = (l - l_min) / h - i;
    const double cm1 = -x * (x - 1) * (x - 2) / 6;
    const double c0 = (x + 1) * (x - 1) * (x - 2) / 2;
    const double c1 = -(x + 1) * x * (x - 2) / 2;
    const double c2 = (x + 1) * x * (x - 1) / 6;
    return cm1 * vals[i - 1] + c0 * vals[i] + c1 * vals[i + 1] + c2 * vals[i + 2];
  }
};

// int_{|y-x|<=radius} U(|y-x|) w(dy) with inner cutoff eps
double criterion_integral(const UTable& U, const MeasureSpec& spec, double x, double radius,
                          double eps) {
  double acc = 0;
  for (const auto& a : spec.atoms) {
    const double d = std::abs(a.first - x);
    if (d > radius) continue;
    acc += a.second * U(std::max(d, eps));
  }
  if (spec.density == DensityPart::UNIFORM) {
    const auto rule = quad::geometric_composite(eps, radius, 1.3, -1, 6);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double r = rule.x[i];
      double rays = 0;
      if (x + r >= spec.d_lo && x + r <= spec.d_hi) rays += 1;
      if (x - r >= spec.d_lo && x - r <= spec.d_hi) rays += 1;
      if (rays > 0) acc += rule.w[i] * U(r) * spec.d_value * rays;
    }
  }
  return acc;
}

CriterionResult criterion_with_table(const UTable& U, const MeasureSpec& spec,
                                     const std::vector<double>& x_samples, double radius) {
  CriterionResult res;
  for (int k = kLadderMin; k <= kLadderMax; ++k) {
    const double eps = std::pow(2.0, -k);
    if (eps >= radius) continue;
    double sup = 0;
    for (double x : x_samples) sup = std::max(sup, criterion_integral(U, spec, x, radius, eps));
    res.ladder.push_back(sup);
  }
  res.divergent = ladder_divergent(res.ladder);
  res.value = res.ladder.empty() ? 0.0 : res.ladder.back();
  return res;
}

}  // namespace

CriterionResult dynkin_criterion(const ScaleProfile& profile, const MeasureSpec& spec,
                                 const std::vector<double>& x_samples, double radius) {
  const UTable U(profile, std::pow(2.0, -kLadderMax));
  return criterion_with_table(U, spec, x_samples, radius);
}

KatoResult kato_criterion(const ScaleProfile& profile, const MeasureSpec& spec,
                          const std::vector<double>& x_samples,
                          const std::vector<double>& delta_ladder) {
  KatoResult res;
  const UTable U(profile, std::pow(2.0, -kLadderMax));
  for (double d : delta_ladder) {
    auto r = criterion_with_table(U, spec, x_samples, d);
    res.deltas.push_back(d);
    res.values.push_back(r.value);
    res.divergent = res.divergent || r.divergent;
  }
  const double first = res.values.empty() ? 0.0 : res.values.front();
  const double last = res.values.empty() ? 0.0 : res.values.back();
  res.vanishing = !res.divergent && (first == 0.0 || last < 0.05 * first);
  return res;
}

CriterionResult criterion_alt(const ScaleProfile& profile, const MeasureSpec& spec,
                              const std::vector<double>& x_samples) {
  const int n = profile.base.dim;
  CriterionResult res;
  for (int k = kLadderMin; k <= kLadderMax; ++k) {
    const double eps = std::pow(2.0, -k);
    const auto rule = quad::geometric_composite(eps, 1.0, 1.3, -1, 6);
    std::vector<double> kern(rule.x.size());
    for (std::size_t i = 0; i < rule.x.size(); ++i)
      kern[i] = rule.w[i] / (std::pow(rule.x[i], n + 1) * profile.q_star(1.0 / rule.x[i]));
    double sup = 0;
    for (double x : x_samples) {
      double acc = 0;
      for (std::size_t i = 0; i < rule.x.size(); ++i)
        acc += kern[i] * spec.ball_mass(x, rule.x[i]);
      sup = std::max(sup, acc);
    }
    res.ladder.push_back(sup);
  }
  res.divergent = ladder_divergent(res.ladder);
  res.value = res.ladder.back();
  return res;
}

SufficientResult sufficient_condition_check(const MeasureSpec& spec,
                                            const std::vector<double>& x_samples, double alpha,
                                            int n, int r_levels) {
  std::vector<double> rs, ms;
  for (int j = 1; j <= r_levels; ++j) {
    const double r = std::pow(3.0, -j);
    double sup = 0;
    for (double x : x_samples) sup = std::max(sup, spec.ball_mass(x, r));
    if (sup <= 0) break;
    rs.push_back(r);
    ms.push_back(sup);
  }
  SufficientResult res;
  if (rs.size() >= 2) res.d_hat = loglog_slope(rs, ms);
  res.holds = res.d_hat > n - alpha + 0.05;
  return res;
}

DirectReport direct_class_check(const std::function<double(double, double, double)>& p,
                                const MeasureSpec& spec, const std::vector<double>& t_ladder,
                                const std::vector<double>& x_samples) {
  if (t_ladder.size() < 3 ||
      *std::min_element(t_ladder.begin(), t_ladder.end()) > 0.2)
    throw PmxError(ErrorCode::KERNEL_RANGE,
                   "direct_class_check: t-ladder cannot resolve the limit trend");
  auto measure_integral = [&](double s, double x) {
    double acc = 0;
    for (const auto& a : spec.atoms) acc += a.second * p(s, x, a.first);
    if (spec.density == DensityPart::UNIFORM) {
      // panels refined toward y = x: the kernel spike narrows with s
      auto side = [&](double r_lo, double r_hi, int sgn) {
        if (r_hi <= r_lo) return 0.0;
        double v = 0;
        const double w = std::min(s, r_hi);
        if (r_lo < w) {
          const auto rule = quad::gauss_legendre(8, r_lo, w);
          for (std::size_t i = 0; i < rule.x.size(); ++i)
            v += rule.w[i] * p(s, x, x + sgn * rule.x[i]);
        }
        const double a = std::max(w, r_lo);
        if (a < r_hi) {
          const auto rule = quad::geometric_composite(a, r_hi, 1.6, -1, 6);
          for (std::size_t i = 0; i < rule.x.size(); ++i)
            v += rule.w[i] * p(s, x, x + sgn * rule.x[i]);
        }
        return v;
      };
      if (spec.d_hi > x) acc += spec.d_value * side(std::max(0.0, spec.d_lo - x), spec.d_hi - x, 1);
      if (spec.d_lo < x) acc += spec.d_value * side(std::max(0.0, x - spec.d_hi), x - spec.d_lo, -1);
    }
    return acc;
  };
  auto time_integral = [&](double t, double x, double cut) {
    const auto rule = quad::geometric_composite(cut, t, 1.6, -1, 5);
    double acc = 0;
    for (std::size_t i = 0; i < rule.x.size(); ++i)
      acc += rule.w[i] * measure_integral(rule.x[i], x);
    return acc;
  };

  DirectReport rep;
  std::vector<double> ts(t_ladder);
  std::sort(ts.begin(), ts.end(), std::greater<double>());
  const double tmin = ts.back();
  for (int k = 0; k <= 10; ++k) {
    const double cut = tmin * std::pow(4.0, -k - 1);
    double sup = 0;
    for (double x : x_samples) sup = std::max(sup, time_integral(tmin, x, cut));
    rep.cut_ladder.push_back(sup);
  }
  rep.divergent = ladder_divergent(rep.cut_ladder);

  const double cut_all = tmin * std::pow(4.0, -11);
  for (double t : ts) {
    double sup = 0;
    for (double x : x_samples) sup = std::max(sup, time_integral(t, x, cut_all));
    rep.t.push_back(t);
    rep.value.push_back(sup);
  }
  if (!rep.divergent) {
    // S_K trend: the integral must decay with a positive power of t
    std::vector<double> vt, vv;
    for (std::size_t i = 0; i < rep.t.size(); ++i)
      if (rep.value[i] > 0) {
        vt.push_back(rep.t[i]);
        vv.push_back(rep.value[i]);
      }
    rep.vanishing = vv.empty() || (vv.size() >= 2 && loglog_slope(vt, vv) > 0.1);
  }
  return rep;
}

ClassVerdict classify(const CriterionResult& dynkin, const KatoResult& kato) {
  if (kato.vanishing && !dynkin.divergent) return ClassVerdict::IN_SK;
  if (!dynkin.divergent) return ClassVerdict::IN_SD_ONLY;
  if (!kato.vanishing) return ClassVerdict::OUT;
  return ClassVerdict::INCONCLUSIVE;
}

}  // namespace pmx::kato

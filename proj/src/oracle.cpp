#include "pmx/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pmx/quad.hpp"

namespace pmx::oracle {

namespace {

constexpr double kPi = std::numbers::pi;

double stable_c(double alpha) {
  if (std::abs(alpha - 1.0) < 1e-12) return kPi / 2;
  return -std::tgamma(-alpha) * std::cos(kPi * alpha / 2);
}

// \int_0^Xi g(xi) e^{-t c xi^alpha} dxi with panels capped by the oscillation
// wavelength of g.  xi^alpha kinks at 0, so the panels grade geometrically out
// of an analytic first-order head.
double fourier_quad(double alpha, double tc, double x, bool cdf, int pts) {
  const double Xi = std::pow(46.0 / tc, 1.0 / alpha);
  const double cap = std::min(Xi / 8, kPi / (2 * std::max(std::abs(x), 1e-12)));
  const double a0 = Xi * 1e-6;
  double acc = cdf ? x * a0
                   : (x != 0 ? std::sin(x * a0) / x : a0) -
                         tc * std::pow(a0, alpha + 1) / (alpha + 1);
  double a = a0, len = a0;
  while (a < Xi) {
    len = std::min(len * 2, cap);
    const double b = std::min(a + len, Xi);
    const auto rule = quad::gauss_legendre(pts, a, b);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double xi = rule.x[i];
      const double g = cdf ? std::sin(x * xi) / xi : std::cos(x * xi);
      acc += rule.w[i] * g * std::exp(-tc * std::pow(xi, alpha));
    }
    a = b;
  }
  return acc / kPi;
}

double adaptive_fourier(double alpha, double tc, double x, bool cdf) {
  const double v8 = fourier_quad(alpha, tc, x, cdf, 8);
  const double v12 = fourier_quad(alpha, tc, x, cdf, 12);
  if (std::abs(v12 - v8) > 1e-9 + 1e-7 * std::abs(v12))
    throw PmxError(ErrorCode::QUADRATURE_UNRESOLVED, "stable kernel Fourier inversion");
  return v12;
}

void check_stable_args(double alpha, double scale, double t) {
  if (!(alpha > 0) || !(alpha < 2))
    throw PmxError(ErrorCode::UNSUPPORTED_ALPHA, "stable index must lie in (0,2)");
  if (!(scale > 0) || !(t > 0))
    throw PmxError(ErrorCode::CONFIG_INVALID, "stable oracle needs scale > 0, t > 0");
}

}  // namespace

double closed_form_stable(double alpha, double scale, double t, double x, bool force_quadrature) {
  check_stable_args(alpha, scale, t);
  if (!force_quadrature && std::abs(alpha - 1.0) < 1e-12) {
    const double a = kPi * scale * t;
    return t * scale / (a * a + x * x);
  }
  // self-similar rescaling keeps the quadrature range t-independent
  const double tc = 2 * scale * stable_c(alpha) * t;
  const double rho = std::pow(tc, -1.0 / alpha);
  const double z = std::abs(x) * rho;
  if (z > 50) return t * scale * std::pow(std::abs(x), -1.0 - alpha);  // Levy tail asymptotics
  return rho * adaptive_fourier(alpha, 1.0, z, false);
}

double closed_form_stable_cdf(double alpha, double scale, double t, double x) {
  check_stable_args(alpha, scale, t);
  if (std::abs(alpha - 1.0) < 1e-12)
    return 0.5 + std::atan(x / (kPi * scale * t)) / kPi;
  const double tc = 2 * scale * stable_c(alpha) * t;
  if (std::abs(x) > 50 * std::pow(tc, 1.0 / alpha)) {
    // Levy-measure tail asymptotics keep the oscillatory panel count bounded
    const double tail = t * scale * std::pow(std::abs(x), -alpha) / alpha;
    return x > 0 ? 1.0 - tail : tail;
  }
  return 0.5 + adaptive_fourier(alpha, tc, x, true);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Rng {
  std::uint64_t s;
  explicit Rng(std::uint64_t seed) : s(seed) {}
  std::uint64_t next_u64() {
    s = splitmix64(s);
    return splitmix64(s ^ 0xd1b54a32d192ed03ULL);
  }
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }  // [0,1)
  double normal() {
    // Box-Muller, one value per call (the pair's second half is discarded so
    // the draw count stays state-independent)
    const double u1 = std::max(uniform(), 1e-300), u2 = uniform();
    return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
  }
  int poisson(double mean) {
    // inversion; mean is kept <= 0.1 by the rate guard
    int k = 0;
    double p = std::exp(-mean), f = p, u = uniform();
    while (u > f && k < 64) {
      ++k;
      p *= mean / k;
      f += p;
    }
    return k;
  }
};

// radius of a density jump beyond eps by inverse transform
double sample_radius(const model::LevyBaseMeasure& base, double eps, double u) {
  const auto& d = base.density;
  const double al = d.alpha;
  if (d.kind == model::DensityKind::POWER)
    return eps * std::pow(1.0 - u, -1.0 / al);
  // TRUNCATED_POWER
  const double lo = std::pow(eps, -al), hi = std::pow(d.cutoff, -al);
  return std::pow(lo - u * (lo - hi), -1.0 / al);
}

}  // namespace

std::vector<double> PathEnsemble::axis(std::size_t time_index, int ax) const {
  std::vector<double> v(positions[time_index].size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = positions[time_index][i][ax];
  return v;
}

PathEnsemble simulate_paths(const model::LevyTypeModel& model, const std::vector<double>& times,
                            const Point& x0, int n_paths, double eps, std::uint64_t seed,
                            int n_steps) {
  const auto& base = model.base;
  const int n = base.dim;
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) || times.front() <= 0)
    throw PmxError(ErrorCode::CONFIG_INVALID, "simulate_paths: ascending positive times required");
  if (base.density.kind == model::DensityKind::TEMPERED_POWER)
    throw PmxError(ErrorCode::CONFIG_INVALID, "simulate_paths: tempered density not supported");
  const double t_max = times.back();
  const double b2 = model.modulation.b2;
  const double angular = n == 1 ? 2.0 : 2 * kPi;

  // dominating large-jump rate (A2: m <= b2)
  double atom_rate = 0;
  for (const auto& a : base.atoms) atom_rate += b2 * a.w;
  const double density_rate =
      b2 * angular * base.ray_mass(eps, std::numeric_limits<double>::infinity());
  const double rate = density_rate + atom_rate;

  if (n_steps <= 0) n_steps = std::max(200, static_cast<int>(std::ceil(20.0 * rate * t_max)));
  const double dt_base = t_max / n_steps;
  if (rate * dt_base > 0.1)
    throw PmxError(ErrorCode::RATE_OVERFLOW, "simulate_paths: large-jump intensity * dt > 0.1");

  // Gaussian small-jump variance per unit time and unit modulation, per axis
  const double head = base.ray_second_moment_head(eps);
  const double var_axis = (n == 1 ? 2.0 : kPi) * head;

  PathEnsemble ens;
  ens.times = times;
  ens.positions.assign(times.size(), std::vector<Point>(n_paths));
  ens.n_paths = n_paths;
  ens.eps = eps;
  ens.n_steps = n_steps;
  ens.seed = seed;

  for (int path = 0; path < n_paths; ++path) {
    Rng rng(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * (path + 1)));
    Point x = x0;
    double t_prev = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double seg = times[ti] - t_prev;
      const int sub = std::max(1, static_cast<int>(std::ceil(seg / dt_base)));
      const double dt = seg / sub;
      for (int s = 0; s < sub; ++s) {
        if (!model.drift.is_zero()) {
          const Point a = model.drift(x);
          for (int d = 0; d < n; ++d) x[d] += a[d] * dt;
        }
        const double mx = model.modulation(x, pt(0), n);
        const double sd = std::sqrt(mx * var_axis * dt);
        for (int d = 0; d < n; ++d) x[d] += sd * rng.normal();
        const int k = rng.poisson(rate * dt);
        for (int j = 0; j < k; ++j) {
          Point u{};
          double w_atom = rng.uniform() * rate;
          if (w_atom < density_rate) {
            const double r = sample_radius(base, eps, rng.uniform());
            if (n == 1) {
              u = pt(rng.uniform() < 0.5 ? -r : r);
            } else {
              const double phi = 2 * kPi * rng.uniform();
              u = pt(r * std::cos(phi), r * std::sin(phi));
            }
          } else {
            w_atom -= density_rate;
            for (const auto& a : base.atoms) {
              w_atom -= b2 * a.w;
              u = a.u;
              if (w_atom < 0) break;
            }
          }
          if (rng.uniform() * b2 <= model.modulation(x, u, n))
            for (int d = 0; d < n; ++d) x[d] += u[d];
        }
      }
      ens.positions[ti][path] = x;
      t_prev = times[ti];
    }
  }
  return ens;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    ks = std::max(ks, std::max(std::abs(F - i / n), std::abs(F - (i + 1) / n)));
  }
  return ks;
}

KernelReport empirical_vs_kernel(const std::vector<double>& samples,
                                 const frozen::SpatialGrid& grid,
                                 const std::vector<double>& p_row) {
  const int N = grid.n;
  const double R = grid.R, h = grid.h();
  KernelReport rep;
  rep.n = static_cast<int>(samples.size());

  // fold into [-R, R)
  std::vector<double> folded(samples);
  for (double& y : folded) {
    y = std::fmod(y + R, 2 * R);
    if (y < 0) y += 2 * R;
    y -= R;
  }

  // piecewise-linear kernel CDF at cell edges (cell j = [y_j - h/2, y_j + h/2))
  std::vector<double> edge(N + 1, 0.0);
  for (int j = 0; j < N; ++j) edge[j + 1] = edge[j] + p_row[j] * h;
  auto kernel_cdf = [&](double y) {
    const double pos = (y + R + h / 2) / h;  // edge index coordinate
    if (pos <= 0) return 0.0;
    if (pos >= N) return edge[N];
    const int j = static_cast<int>(pos);
    return edge[j] + (pos - j) * (edge[j + 1] - edge[j]);
  };
  rep.ks = ks_distance(folded, kernel_cdf);

  // binned bulk comparison (|y| <= R/2), 8-cell bins
  const int bw = 8;
  const double pmax = *std::max_element(p_row.begin(), p_row.end());
  std::vector<int> counts(N / bw, 0);
  for (double y : folded) {
    const int j = std::clamp(static_cast<int>((y + R) / h), 0, N - 1);
    ++counts[j / bw];
  }
  for (int b = 0; b < N / bw; ++b) {
    const double yc = grid.coord(b * bw + bw / 2);
    if (std::abs(yc) > R / 2) continue;
    double pavg = 0;
    for (int j = 0; j < bw; ++j) pavg += p_row[b * bw + j] / bw;
    const double emp = counts[b] / (rep.n * bw * h);
    rep.sup_bulk = std::max(rep.sup_bulk, std::abs(emp - pavg) / pmax);
  }

  double bulk_model = 0;
  int bulk_count = 0;
  for (int j = 0; j < N; ++j)
    if (std::abs(grid.coord(j)) <= R / 2) bulk_model += p_row[j] * h;
  for (double y : folded)
    if (std::abs(y) <= R / 2) ++bulk_count;
  rep.tail_model = edge[N] - bulk_model;
  rep.tail_empirical = 1.0 - bulk_count / static_cast<double>(rep.n);
  return rep;
}

}  // namespace pmx::oracle

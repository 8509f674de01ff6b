#include "pmx/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pmx/fft.hpp"
#include "pmx/quad.hpp"

namespace pmx::envelopes {

using frozen::SpatialGrid;
using model::LevyTypeModel;
using model::ScaleProfile;
using parametrix::TimeMesh;

double GridMeasure::mass() const {
  double s = 0;
  for (double v : w) s += v;
  return s;
}

GridMeasure measure_convolve(const GridMeasure& a, const GridMeasure& b) {
  if (!a.grid.compatible(b.grid))
    throw PmxError(ErrorCode::GRID_MISMATCH, "measure_convolve: incompatible grids");
  const int n = a.grid.n;
  // recenter a so that index 0 is the origin node, then wrap
  std::vector<double> as(n);
  for (int i = 0; i < n; ++i) as[i] = a.w[(i + n / 2) % n];
  GridMeasure out;
  out.grid = a.grid;
  out.t = a.t;
  out.tag = a.tag + "*" + b.tag;
  out.w = fft::circular_convolve(as, b.w);
  return out;
}

GridMeasure unit_atom(const SpatialGrid& g) {
  GridMeasure m;
  m.grid = g;
  m.w.assign(g.size(), 0.0);
  m.w[g.n / 2] = 1.0;
  m.tag = "delta0";
  return m;
}

GridMeasure lambda_measure(const LevyTypeModel& model, const ScaleProfile& profile, double t,
                           const SpatialGrid& grid) {
  if (grid.dim != 1)
    throw PmxError(ErrorCode::CONFIG_INVALID, "lambda_measure: 1D only");
  const double rho = profile.rho(t);
  const double cut = 1.0 / rho;
  GridMeasure m;
  m.grid = grid;
  m.t = t;
  m.tag = "Lambda";
  m.w.assign(grid.n, 0.0);
  const double h = grid.h();
  if (model.base.has_density()) {
    for (int j = 0; j < grid.n; ++j) {
      const double x = grid.coord(j);
      double lo = std::abs(x) - h / 2, hi = std::abs(x) + h / 2;
      if (x < 0 && j == 0) hi = std::numeric_limits<double>::infinity();
      if (x > 0 && j == grid.n - 1) hi = std::numeric_limits<double>::infinity();
      lo = std::max(lo, cut);
      if (hi <= lo) continue;
      m.w[j] += t * model.base.ray_mass(lo, hi);
    }
  }
  for (const auto& a : model.base.atoms) {
    if (std::abs(a.u[0]) * rho <= 1.0) continue;
    const int j = std::clamp(static_cast<int>(std::round((a.u[0] + grid.R) / h)), 0, grid.n - 1);
    m.w[j] += t * a.w;
  }
  return m;
}

GridMeasure exp_measure(const GridMeasure& q, int K) {
  GridMeasure acc = unit_atom(q.grid);
  acc.t = q.t;
  acc.tag = "exp(" + q.tag + ")";
  GridMeasure power = unit_atom(q.grid);
  double fact = 1.0;
  for (int k = 1; k <= K; ++k) {
    power = measure_convolve(power, q);
    fact *= k;
    for (int i = 0; i < q.grid.n; ++i) acc.w[i] += power.w[i] / fact;
  }
  return acc;
}

GridMeasure poisson_exponential(const GridMeasure& lam, int K, double* tail) {
  const double lm = lam.mass();
  GridMeasure p = exp_measure(lam, K);
  const double norm = std::exp(-lm);
  for (auto& v : p.w) v *= norm;
  p.tag = "P";
  p.t = lam.t;
  if (tail) {
    double t = std::pow(lm, K + 1);
    for (int k = 2; k <= K + 1; ++k) t /= k;
    *tail = t;
  }
  return p;
}

GridMeasure tilt_measure(const GridMeasure& p, double gamma, double rho_t) {
  GridMeasure out = p;
  out.tag = p.tag + ",tilt";
  const double rg = std::pow(rho_t, gamma);
  for (int j = 0; j < p.grid.n; ++j) {
    const double w = std::abs(p.grid.coord(j));
    out.w[j] *= 1.0 + rg * std::min(std::pow(w, gamma), 1.0);
  }
  return out;
}

int k0_index(double alpha, double sigma, double lambda) {
  return static_cast<int>(std::floor(sigma * (alpha + 1) / (alpha * lambda))) + 1;
}

namespace {

// rows[i] = weights at mesh.t[i]; time-space convolution with another family
std::vector<std::vector<double>> ts_convolve(const TimeMesh& mesh, const SpatialGrid& grid,
                                             const std::vector<std::vector<double>>& a,
                                             double gexp_a,
                                             const std::vector<std::vector<double>>& b,
                                             double gexp_b, int pts) {
  std::vector<std::vector<double>> out;
  GridMeasure ma, mb;
  ma.grid = mb.grid = grid;
  const double grade = std::max(gexp_a, gexp_b);
  for (double t : mesh.t) {
    const auto rule = quad::singular_power_rule_both(t, grade, pts);
    std::vector<double> acc(grid.n, 0.0);
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double s = rule.x[q];
      ma.w = parametrix::interp_field(mesh, a, gexp_a, s);
      mb.w = parametrix::interp_field(mesh, b, gexp_b, t - s);
      auto conv = measure_convolve(ma, mb);
      for (int i = 0; i < grid.n; ++i) acc[i] += rule.w[q] * conv.w[i];
    }
    out.push_back(std::move(acc));
  }
  return out;
}

}  // namespace

Hierarchy g_hierarchy(const LevyTypeModel& model, const ScaleProfile& profile,
                      const TimeMesh& mesh, const SpatialGrid& grid, double lambda, int K_pi,
                      double A, int pts) {
  if (lambda <= 0 || lambda >= profile.alpha)
    throw PmxError(ErrorCode::CONFIG_INVALID, "g_hierarchy: lambda must lie in (0, alpha)");
  Hierarchy h;
  h.mesh = mesh;
  h.grid = grid;
  h.lambda = lambda;
  h.sigma = profile.sigma;
  h.delta = 1.0 - lambda / profile.sigma;
  h.A = A;
  h.k0 = k0_index(profile.alpha, profile.sigma, lambda);
  h.K_pi = K_pi > 0 ? K_pi : h.k0 + 8;

  const int M = mesh.size();
  std::vector<std::vector<double>> grows;  // G weights per time
  for (int i = 0; i < M; ++i) {
    const double t = mesh.t[i];
    h.rho.push_back(profile.rho(t));
    h.lam.push_back(lambda_measure(model, profile, t, grid));
    h.P.push_back(poisson_exponential(h.lam.back()));
    h.Ptl.push_back(tilt_measure(h.P.back(), lambda, h.rho.back()));
    // G = t^{lambda/sigma - 1} (P_tl + Lambda * P_tl)
    auto lp = measure_convolve(h.lam.back(), h.Ptl.back());
    const double f = std::pow(t, lambda / h.sigma - 1.0);
    std::vector<double> g(grid.n);
    for (int j = 0; j < grid.n; ++j) g[j] = f * (h.Ptl.back().w[j] + lp.w[j]);
    grows.push_back(std::move(g));
  }

  auto gexp_of = [&](int k, bool chained) {
    const double e = (k - 1) - k * h.delta - (chained ? 1.0 / profile.alpha : 0.0);
    return std::max(0.0, -e);
  };

  std::vector<std::vector<std::vector<double>>> gk(h.K_pi);
  gk[0] = grows;
  for (int k = 2; k <= h.K_pi; ++k) {
    const bool prev_chained = (k - 1) > h.k0;
    auto prev = gk[k - 2];
    if (k - 1 == h.k0) {
      // the k0 -> k0+1 step carries the extra rho_t factor
      for (int i = 0; i < M; ++i)
        for (auto& v : prev[i]) v *= h.rho[i];
    }
    const double ga = (k - 1 == h.k0) ? gexp_of(k - 1, true) : gexp_of(k - 1, prev_chained);
    gk[k - 1] = ts_convolve(mesh, grid, prev, ga, grows, h.delta, pts);
  }

  h.Gk.resize(h.K_pi);
  h.gk_mass.resize(h.K_pi);
  for (int k = 1; k <= h.K_pi; ++k) {
    for (int i = 0; i < M; ++i) {
      GridMeasure m;
      m.grid = grid;
      m.t = mesh.t[i];
      m.tag = "G(" + std::to_string(k) + ")";
      m.w = gk[k - 1][i];
      h.gk_mass[k - 1].push_back(m.mass());
      h.Gk[k - 1].push_back(std::move(m));
    }
  }

  // Pi = sum A^k G^{(k)}, with the divergence guard on the term masses
  for (int i = 0; i < M; ++i) {
    std::vector<double> terms;
    double ak = 1.0;
    GridMeasure pi;
    pi.grid = grid;
    pi.t = mesh.t[i];
    pi.tag = "Pi";
    pi.w.assign(grid.n, 0.0);
    for (int k = 1; k <= h.K_pi; ++k) {
      ak *= A;
      terms.push_back(ak * h.gk_mass[k - 1][i]);
      for (int j = 0; j < grid.n; ++j) pi.w[j] += ak * h.Gk[k - 1][i].w[j];
    }
    if (parametrix::series_diverging(terms, h.k0))
      throw PmxError(ErrorCode::SERIES_DIVERGING, "g_hierarchy: Pi series terms growing past k0");
    auto lp = measure_convolve(h.lam[i], pi);
    GridMeasure q;
    q.grid = grid;
    q.t = mesh.t[i];
    q.tag = "Q";
    q.w.resize(grid.n);
    for (int j = 0; j < grid.n; ++j) q.w[j] = h.lam[i].w[j] + lp.w[j];
    h.Pi.push_back(std::move(pi));
    h.Q.push_back(std::move(q));
  }
  return h;
}

double p_star_pi_mass(const Hierarchy& h, double t, int pts) {
  std::vector<std::vector<double>> pm, im;
  for (int i = 0; i < h.mesh.size(); ++i) {
    pm.push_back({h.P[i].mass()});
    im.push_back({h.Pi[i].mass()});
  }
  const auto rule = quad::singular_power_rule(t, h.delta, pts);
  double acc = 0;
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double s = rule.x[q];
    const double ip = parametrix::interp_field(h.mesh, pm, 0.0, t - s)[0];
    const double ii = parametrix::interp_field(h.mesh, im, h.delta, s)[0];
    acc += rule.w[q] * ip * ii;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Envelope evaluation / fitting
// ---------------------------------------------------------------------------

double eval_upper_envelope(double x, double rho_t, const EnvelopeParams& par,
                           const GridMeasure& exp_q) {
  const SpatialGrid& g = exp_q.grid;
  const double rn = std::pow(rho_t, g.dim);
  double acc = 0;
  for (int j = 0; j < g.n; ++j) {
    if (exp_q.w[j] == 0) continue;
    acc += exp_q.w[j] * par.a3 * std::exp(-par.a4 * std::abs((x - g.coord(j)) * rho_t));
  }
  return rn * acc;
}

std::vector<double> upper_envelope_row(double rho_t, const EnvelopeParams& par,
                                       const GridMeasure& exp_q) {
  const SpatialGrid& g = exp_q.grid;
  GridMeasure f;
  f.grid = g;
  f.w.resize(g.n);
  const double rn = std::pow(rho_t, g.dim);
  for (int j = 0; j < g.n; ++j)
    f.w[j] = rn * par.a3 * std::exp(-par.a4 * std::abs(g.coord(j) * rho_t));
  return measure_convolve(f, exp_q).w;
}

double eval_lower_bound(double x, double rho_t, const EnvelopeParams& par) {
  const double arg = 1.0 - par.a2 * rho_t * std::abs(x);
  return arg > 0 ? par.a1 * rho_t * arg : 0.0;
}

EnvelopeParams fit_envelope_constants(const std::vector<FitSample>& fits, const Hierarchy& h,
                                      const ScaleProfile& profile, int lattice, double a_lo,
                                      double a_hi) {
  if (fits.empty()) throw PmxError(ErrorCode::CONFIG_INVALID, "fit: no samples");
  const SpatialGrid& g = h.grid;
  std::vector<double> lat(lattice);
  for (int i = 0; i < lattice; ++i)
    lat[i] = a_lo * std::pow(a_hi / a_lo, double(i) / (lattice - 1));

  struct Prep {
    double rho;
    int yj;
    const std::vector<double>* p;
    GridMeasure expq;
  };
  std::vector<Prep> prep;
  for (const auto& s : fits) {
    int ti = 0;
    double best = 1e300;
    for (int i = 0; i < h.mesh.size(); ++i) {
      const double d = std::abs(std::log(h.mesh.t[i] / s.t));
      if (d < best) {
        best = d;
        ti = i;
      }
    }
    if (best > 1e-6)
      throw PmxError(ErrorCode::CONFIG_INVALID, "fit: sample time not on the hierarchy mesh");
    Prep pr;
    pr.rho = h.rho[ti];
    pr.yj = std::clamp(static_cast<int>(std::round((s.y + g.R) / g.h())), 0, g.n - 1);
    pr.p = &s.p;
    pr.expq = exp_measure(h.Q[ti], 12);
    prep.push_back(std::move(pr));
  }

  EnvelopeParams out;
  out.K_pi = h.K_pi;
  out.A = h.A;

  // upper: for each a4, the smallest admissible a3 is the worst-case ratio
  double best_a3 = 1e300, best_a4 = 0;
  for (double a4 : lat) {
    EnvelopeParams unit;
    unit.a3 = 1.0;
    unit.a4 = a4;
    double need = 0;
    for (const auto& pr : prep) {
      auto env = upper_envelope_row(pr.rho, unit, pr.expq);
      for (int j = 0; j < g.n; ++j) {
        const double pv = (*pr.p)[j];
        if (pv <= 0) continue;
        const double ev = env[(j - pr.yj + g.n / 2 + 2 * g.n) % g.n];
        need = std::max(need, pv / ev);
      }
    }
    // smallest lattice point at or above the required ratio
    auto it = std::lower_bound(lat.begin(), lat.end(), need);
    if (it == lat.end()) continue;
    if (*it < best_a3 - 1e-15 * best_a3) {
      best_a3 = *it;
      best_a4 = a4;
    }
  }
  if (best_a4 == 0)
    throw PmxError(ErrorCode::NO_FEASIBLE_PARAMS, "fit: no feasible upper-envelope constants");
  out.a3 = best_a3;
  out.a4 = best_a4;

  // lower: for each a2, the largest admissible a1 is the worst-case ratio on
  // the support of the cone
  double best_a1 = 0, best_a2 = 0;
  for (double a2 : lat) {
    double cap = 1e300;
    for (const auto& pr : prep) {
      for (int j = 0; j < g.n; ++j) {
        const double arg = 1.0 - a2 * pr.rho * std::abs(g.coord(j) - g.coord(pr.yj));
        if (arg <= 0) continue;
        cap = std::min(cap, (*pr.p)[j] / (pr.rho * arg));
      }
    }
    if (cap <= 0) continue;
    // largest lattice point at or below the cap
    auto it = std::upper_bound(lat.begin(), lat.end(), cap);
    if (it == lat.begin()) continue;
    const double a1 = *(it - 1);
    if (a1 > best_a1 || (a1 == best_a1 && a2 > best_a2)) {
      best_a1 = a1;
      best_a2 = a2;
    }
  }
  if (best_a2 == 0)
    throw PmxError(ErrorCode::NO_FEASIBLE_PARAMS, "fit: no feasible lower-bound constants");
  out.a1 = best_a1;
  out.a2 = best_a2;
  return out;
}

}  // namespace pmx::envelopes

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pmx/envelopes.hpp"
#include "pmx/frozen.hpp"
#include "pmx/model.hpp"
#include "pmx/parametrix.hpp"
#include "pmx/quad.hpp"

using namespace pmx;
using namespace pmx::envelopes;
using parametrix::TimeMesh;

namespace {
frozen::SpatialGrid grid16() { return {1, 256, 16.0}; }
}  // namespace

TEST_CASE("lambda measure: analytic mass, ledger bound, empty restriction") {
  auto m = model::make_stable_model(1, 1.0);
  auto prof = model::build_profile(m);
  auto g = grid16();
  // t = 0.25, rho = 1: mass = 0.25 * 2 int_1^inf u^{-2} du = 0.5
  auto lam = lambda_measure(m, prof, 0.25, g);
  CHECK(lam.mass() == doctest::Approx(0.5).epsilon(1e-10));
  for (double v : lam.w) CHECK(v >= 0.0);
  // no support below the cutoff 1/rho = 1
  for (int j = 0; j < g.n; ++j)
    if (std::abs(g.coord(j)) < 1.0 - g.h()) CHECK(lam.w[j] == 0.0);
  for (double t : {0.01, 0.05, 0.2, 0.7, 1.0})
    CHECK(lambda_measure(m, prof, t, g).mass() <= 1.0 + 1e-12);

  // truncated measure with rho_t * cutoff <= 1: empty indicator
  auto mt = model::make_truncated_stable_model(1.0, 0.5);
  auto pt_ = model::build_profile(mt);
  double t0 = 1.0;
  while (pt_.rho(t0) * 0.5 > 1.0) t0 *= 0.5;
  CHECK(lambda_measure(mt, pt_, t0, g).mass() == 0.0);
}

TEST_CASE("poisson exponential: unit atom, scalar Poisson law, unit mass") {
  auto g = grid16();
  GridMeasure zero;
  zero.grid = g;
  zero.w.assign(g.n, 0.0);
  auto p0 = poisson_exponential(zero);
  CHECK(p0.mass() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p0.w[g.n / 2] == doctest::Approx(1.0).epsilon(1e-14));

  // Lambda = 0.5 delta at u=1 (node 128+8): P has weight e^{-1/2} 0.5^k/k! at k
  GridMeasure lam = zero;
  const int j1 = g.n / 2 + static_cast<int>(std::round(1.0 / g.h()));
  lam.w[j1] = 0.5;
  double tail = 0;
  auto p = poisson_exponential(lam, 20, &tail);
  for (int k = 0; k <= 4; ++k) {
    double fk = 1;
    for (int i = 2; i <= k; ++i) fk *= i;
    const int jk = g.n / 2 + k * (j1 - g.n / 2);
    CHECK(p.w[jk] == doctest::Approx(std::exp(-0.5) * std::pow(0.5, k) / fk).epsilon(1e-12));
  }
  CHECK(p.mass() + tail >= 1.0 - 1e-10);
  CHECK(p.mass() <= 1.0 + 1e-12);
}

TEST_CASE("tilt measure: origin fixed, mass grows, monotone in gamma on the unit ball") {
  auto g = grid16();
  GridMeasure p;
  p.grid = g;
  p.w.assign(g.n, 0.0);
  p.w[g.n / 2] = 0.3;
  const int joff = g.n / 2 + 4;  // |w| = 0.5
  p.w[joff] = 0.7;
  auto t1 = tilt_measure(p, 0.5, 2.0);
  CHECK(t1.w[g.n / 2] == doctest::Approx(0.3));  // factor 1 at w = 0
  CHECK(t1.mass() >= p.mass());
  auto t2 = tilt_measure(p, 0.8, 2.0);
  CHECK(t2.w[joff] >= t1.w[joff]);  // rho >= 1, |w| <= 1
}

TEST_CASE("hierarchy masses: ledger, slopes, gamma bound, divergence guard") {
  auto m = model::make_modulated_stable_model(1.0, 0.4, 0.5);
  auto prof = model::build_profile(m);
  auto g = grid16();
  TimeMesh mesh = TimeMesh::geometric(1e-2, 1.0, 6);
  auto h = g_hierarchy(m, prof, mesh, g, 0.5);
  CHECK(h.k0 == 5);
  CHECK(h.delta == doctest::Approx(0.5).epsilon(0.03));
  CHECK(h.K_pi == h.k0 + 8);

  // regressions over the full two-decade mesh: the bounded prefactor
  // (rho_t^lambda tilt) drifts too much over a single decade
  std::vector<double> ts, gm, pim, ppm;
  for (int i = 0; i < mesh.size(); ++i) {
    CHECK(h.lam[i].mass() <= 1.0 + 1e-12);
    CHECK(h.P[i].mass() == doctest::Approx(1.0).epsilon(1e-10));
    ts.push_back(mesh.t[i]);
    gm.push_back(h.G()[i].mass());
    pim.push_back(h.Pi[i].mass());
  }
  std::vector<double> ts1, ppm1;  // the time integral accumulates the
  for (int i = 0; i < mesh.size(); ++i) {  // prefactor drift; regress on [0.1,1]
    if (mesh.t[i] < 0.1 - 1e-9) continue;
    ts1.push_back(mesh.t[i]);
    ppm1.push_back(p_star_pi_mass(h, mesh.t[i]));
  }
  CHECK(std::abs(loglog_slope(ts, gm) + h.delta) < 0.1);
  CHECK(std::abs(loglog_slope(ts, pim) + h.delta) < 0.1);
  CHECK(std::abs(loglog_slope(ts1, ppm1) - (1 - h.delta)) < 0.1);

  // gamma bound on the plain convolution-power masses, single fitted c:
  // per-k constants must stay in a narrow band
  const double d = h.delta;
  std::vector<std::vector<double>> g1rows, mk;  // scalar mass rows
  for (int i = 0; i < mesh.size(); ++i) g1rows.push_back({h.G()[i].mass()});
  mk = g1rows;
  const double g1 = std::tgamma(1 - d);
  double cmin = 1e300, cmax = 0;
  for (int k = 1; k <= h.K_pi; ++k) {
    if (k > 1) {
      // G^{*k}(t) = int_0^t G^{*(k-1)}(s) G(t-s) ds, scalar masses
      std::vector<std::vector<double>> next;
      const double gexp = std::max(0.0, 1.0 + (k - 1) * d - (k - 1));
      for (int i = 0; i < mesh.size(); ++i) {
        const double t = mesh.t[i];
        auto rule = quad::singular_power_rule_both(t, d, 8);
        double acc = 0;
        for (std::size_t q = 0; q < rule.x.size(); ++q)
          acc += rule.w[q] * parametrix::interp_field(mesh, mk, gexp, rule.x[q])[0] *
                 parametrix::interp_field(mesh, g1rows, d, t - rule.x[q])[0];
        next.push_back({acc});
      }
      mk = std::move(next);
    }
    // fit c_k at the largest ladder time bucket
    for (int i = 0; i < mesh.size(); ++i) {
      const double t = mesh.t[i];
      if (t < 0.1) continue;
      const double bound_shape = std::pow(g1, k) / std::tgamma(k * (1 - d)) *
                                 std::pow(t, k - 1 - k * d);
      const double ck = std::pow(mk[i][0] / bound_shape, 1.0 / k);
      cmin = std::min(cmin, ck);
      cmax = std::max(cmax, ck);
    }
  }
  CHECK(cmax / cmin < 5.0);  // single fitted c = cmax makes the bound hold everywhere

  // Q-domination, k = 1..3: Q^{*k} >= Lambda^{*k} + Lambda^{*k} * Pi node-wise
  const int ti = mesh.size() - 1;
  GridMeasure qp = unit_atom(g), lp = unit_atom(g);
  for (int k = 1; k <= 3; ++k) {
    qp = measure_convolve(qp, h.Q[ti]);
    lp = measure_convolve(lp, h.lam[ti]);
    auto lpi = measure_convolve(lp, h.Pi[ti]);
    for (int j = 0; j < g.n; ++j) CHECK(qp.w[j] >= lp.w[j] + lpi.w[j] - 1e-12);
  }
}

TEST_CASE("series divergence guard triggers on a growing hierarchy") {
  auto m = model::make_modulated_stable_model(1.0, 0.4, 0.5);
  auto prof = model::build_profile(m);
  TimeMesh mesh = TimeMesh::geometric(1e-2, 1.0, 6);
  try {
    auto h = g_hierarchy(m, prof, mesh, grid16(), 0.5, 0, /*A=*/50.0);
    CHECK(false);
  } catch (const PmxError& e) {
    CHECK(e.code() == ErrorCode::SERIES_DIVERGING);
  }
}

TEST_CASE("upper envelope evaluation: degenerate Q") {
  auto g = grid16();
  EnvelopeParams par;
  par.a3 = 2.0;
  par.a4 = 1.5;
  auto expq = unit_atom(g);  // exp of the zero measure
  const double rho = 3.0;
  CHECK(eval_upper_envelope(0.0, rho, par, expq) == doctest::Approx(2.0 * rho));
  for (double x : {0.5, 1.0, -2.0})
    CHECK(eval_upper_envelope(x, rho, par, expq) ==
          doctest::Approx(rho * 2.0 * std::exp(-1.5 * std::abs(x) * rho)));
  auto row = upper_envelope_row(rho, par, expq);
  const int j = g.n / 2 + 8;
  CHECK(row[j] == doctest::Approx(eval_upper_envelope(g.coord(j), rho, par, expq)).epsilon(1e-12));
}

TEST_CASE("lower bound evaluation") {
  EnvelopeParams par;
  par.a1 = 0.4;
  par.a2 = 2.0;
  CHECK(eval_lower_bound(0.0, 5.0, par) == doctest::Approx(0.4 * 5.0));
  CHECK(eval_lower_bound(0.2, 5.0, par) == 0.0);  // a2 rho |x| = 2 >= 1
  CHECK(eval_lower_bound(0.05, 5.0, par) == doctest::Approx(2.0 * (1 - 0.5)));
}

TEST_CASE("gaussian harness: feasible fit with Q = 0") {
  auto g = grid16();
  Hierarchy h;
  h.grid = g;
  h.mesh.t = {0.5};
  h.rho.push_back(1.0);
  GridMeasure zero;
  zero.grid = g;
  zero.w.assign(g.n, 0.0);
  h.Q.push_back(zero);
  FitSample s;
  s.t = 0.5;
  s.y = 0.0;
  s.p.resize(g.n);
  for (int j = 0; j < g.n; ++j)
    s.p[j] = std::exp(-0.5 * g.coord(j) * g.coord(j)) / std::sqrt(2 * std::numbers::pi);
  auto par = fit_envelope_constants({s}, h, model::build_profile(model::make_stable_model(1, 1.0)));
  CHECK(par.a3 > 0);
  CHECK(par.a1 > 0);
  for (int j = 0; j < g.n; ++j) {
    CHECK(s.p[j] <= eval_upper_envelope(g.coord(j), 1.0, par, unit_atom(g)) * (1 + 1e-9));
    CHECK(s.p[j] >= eval_lower_bound(g.coord(j), 1.0, par) - 1e-12);
  }
  // infeasible lattice window
  CHECK_THROWS_AS((void)fit_envelope_constants({s}, h, model::build_profile(model::make_stable_model(1, 1.0)),
                                               8, 1e-7, 2e-7),
                  PmxError);
}

TEST_CASE("fit/verify split on the modulated model") {
  auto m = model::make_modulated_stable_model(1.0, 0.4, 0.5);
  auto prof = model::build_profile(m);
  frozen::SpatialGrid g{1, 256, 20.0};
  parametrix::SolveOptions o;
  o.mesh = TimeMesh::geometric(1e-2, 1.0, 6);
  o.y_stride = 32;
  o.delta = 0.5;
  o.sigma = 1.0;
  parametrix::ParametrixSolver solver(m, g, o);
  auto h = g_hierarchy(m, prof, o.mesh, g, 0.5);

  auto mesh_t = [&](int i) { return o.mesh.t[i]; };
  const int i_fit1 = 6, i_fit2 = 9, i_hold1 = 8, i_hold2 = 12;  // 0.1, .316 | .215, 1.0
  std::vector<FitSample> fits;
  for (int ir : {4, 5}) {  // y = 0 and y = 32h - R... rows at stride 32
    for (int it : {i_fit1, i_fit2}) {
      FitSample s;
      s.t = mesh_t(it);
      s.y = g.coord(solver.y_indices()[ir]);
      s.p = solver.solve_column(s.t, ir);
      fits.push_back(std::move(s));
    }
  }
  auto par = fit_envelope_constants(fits, h, prof);
  CHECK(par.a1 > 0);
  CHECK(par.a3 > 0);

  // held-out sandwich
  for (int it : {i_hold1, i_hold2}) {
    const double t = mesh_t(it);
    const double rho = prof.rho(t);
    auto expq = exp_measure(h.Q[it], 12);
    for (int ir : {4, 5}) {
      const double y = g.coord(solver.y_indices()[ir]);
      auto p = solver.solve_column(t, ir);
      auto env = upper_envelope_row(rho, par, expq);
      for (int j = 0; j < g.n; ++j) {
        const double ev = env[(j - solver.y_indices()[ir] + g.n / 2 + 2 * g.n) % g.n];
        CHECK(p[j] <= ev * 1.05 + 1e-12);
        CHECK(p[j] >= eval_lower_bound(g.coord(j) - y, rho, par) * 0.95 - 1e-12);
      }
    }
  }
}

#include "pmx/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pmx/fft.hpp"
#include "pmx/quad.hpp"

namespace pmx::parametrix {

using frozen::SpatialGrid;
using model::LevyTypeModel;

// ---------------------------------------------------------------------------
// TimeMesh / interpolation
// ---------------------------------------------------------------------------

TimeMesh TimeMesh::geometric(double t_min, double t_max, int pts_per_decade) {
  TimeMesh m;
  const double decades = std::log10(t_max / t_min);
  const int npts = std::max(2, static_cast<int>(std::round(decades * pts_per_decade)) + 1);
  for (int i = 0; i < npts; ++i)
    m.t.push_back(t_min * std::pow(t_max / t_min, double(i) / (npts - 1)));
  return m;
}

std::vector<double> interp_field(const TimeMesh& mesh, const std::vector<std::vector<double>>& rows,
                                 double gexp, double s) {
  const int M = mesh.size();
  const std::size_t nx = rows[0].size();
  if (s <= mesh.t[0]) {
    // extrapolate with the observed decay of the first two rows: band-limited
    // grid fields saturate below the resolvable scale, so the continuum
    // exponent would overshoot here
    auto supn = [](const std::vector<double>& v) {
      double m = 0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    };
    const double n0 = supn(rows[0]), n1 = supn(rows[1]);
    double slope = 0;
    if (n0 > 0 && n1 > 0) slope = std::log(n1 / n0) / std::log(mesh.t[1] / mesh.t[0]);
    std::vector<double> out(rows[0]);
    const double f = std::pow(s / mesh.t[0], slope);
    for (auto& v : out) v *= f;
    return out;
  }
  const double lt0 = std::log(mesh.t[0]);
  const double dl = std::log(mesh.t[1]) - lt0;
  const double u = (std::log(s) - lt0) / dl;
  const int j = std::clamp(static_cast<int>(std::floor(u)), 1, M - 3);
  const double x = u - j;
  // 4-point Lagrange on the uniform log-t stencil (x in [-1,2] stays inside it)
  const double cm1 = -x * (x - 1) * (x - 2) / 6;
  const double c0 = (x + 1) * (x - 1) * (x - 2) / 2;
  const double c1 = -(x + 1) * x * (x - 2) / 2;
  const double c2 = (x + 1) * x * (x - 1) / 6;
  const double sg = std::pow(s, -gexp);
  const double f0 = cm1 * std::pow(mesh.t[j - 1], gexp) * sg;
  const double f1 = c0 * std::pow(mesh.t[j], gexp) * sg;
  const double f2 = c1 * std::pow(mesh.t[j + 1], gexp) * sg;
  const double f3 = c2 * std::pow(mesh.t[j + 2], gexp) * sg;
  std::vector<double> out(nx);
  const auto &a = rows[j - 1], &b = rows[j], &c = rows[j + 1], &d = rows[j + 2];
  for (std::size_t i = 0; i < nx; ++i) out[i] = f0 * a[i] + f1 * b[i] + f2 * c[i] + f3 * d[i];
  return out;
}

bool series_diverging(const std::vector<double>& term_sups, int k0) {
  int streak = 0;
  for (std::size_t i = 1; i < term_sups.size(); ++i) {
    const int m = static_cast<int>(i) + 1;  // term index, 1-based
    if (m <= k0) continue;
    if (term_sups[i] > term_sups[i - 1] && term_sups[i - 1] > 0) {
      if (++streak >= 3) return true;
    } else {
      streak = 0;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Plain convolutions
// ---------------------------------------------------------------------------

std::vector<double> space_convolution_fft(const SpatialGrid& g, const std::vector<double>& kernel,
                                          const std::vector<double>& f) {
  if (g.dim != 1) throw PmxError(ErrorCode::CONFIG_INVALID, "space_convolution: 1D only");
  // kernel sampled at offsets w_j = -R + j h; recenter so index 0 is w = 0
  std::vector<double> ks(g.n);
  for (int i = 0; i < g.n; ++i) ks[i] = kernel[(i + g.n / 2) % g.n];
  auto out = fft::circular_convolve(ks, f);
  for (auto& v : out) v *= g.h();
  return out;
}

std::vector<double> space_convolution_gemm(const SpatialGrid& g, const std::vector<double>& kernel,
                                           const std::vector<double>& f) {
  if (g.dim != 1) throw PmxError(ErrorCode::CONFIG_INVALID, "space_convolution: 1D only");
  std::vector<double> out(g.n, 0.0);
  for (int j = 0; j < g.n; ++j) {
    double s = 0;
    for (int k = 0; k < g.n; ++k) s += kernel[(j - k + g.n / 2 + 4 * g.n) % g.n] * f[k];
    out[j] = s * g.h();
  }
  return out;
}

std::vector<double> spacetime_convolution(const SpatialGrid& grid, const TimeMesh& mesh,
                                          const std::function<std::vector<double>(double)>& f_kernel,
                                          const std::vector<std::vector<double>>& g_rows,
                                          double gexp, double t, int pts) {
  std::vector<double> out(grid.n, 0.0);
  const auto rule = quad::singular_power_rule(t, gexp, pts);
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double s = rule.x[q];
    const auto gs = interp_field(mesh, g_rows, gexp, s);
    const auto conv = space_convolution_fft(grid, f_kernel(t - s), gs);
    for (int i = 0; i < grid.n; ++i) out[i] += rule.w[q] * conv[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// ChebEngine
// ---------------------------------------------------------------------------

ChebEngine::ChebEngine(const LevyTypeModel& model, const SpatialGrid& grid, int L)
    : model_(&model), grid_(grid), L_(L) {
  if (grid.dim != 1) throw PmxError(ErrorCode::CONFIG_INVALID, "ChebEngine: 1D only");
  if (model.modulation.u_dependent() || !model.drift.is_zero() || !model.symmetric)
    throw PmxError(ErrorCode::CONFIG_INVALID,
                   "ChebEngine needs a symmetric separable model with zero drift");
  auto tab = frozen::build_symbol_table(model, grid);
  qb_ = std::move(tab.re);
  const double b1 = model.modulation.b1, b2 = model.modulation.b2;
  cmid_ = 0.5 * (b1 + b2);
  chalf_ = 0.5 * (b2 - b1);
  if (chalf_ < 1e-9) {
    L_ = 1;
    chalf_ = 0.0;
  }
  mvec_.resize(grid.n);
  for (int j = 0; j < grid.n; ++j) mvec_[j] = model.modulation(pt(grid.coord(j)), pt(0), 1);
  Tm_.assign(L_, std::vector<double>(grid.n, 1.0));
  if (L_ > 1) {
    for (int j = 0; j < grid.n; ++j) {
      const double mt = (mvec_[j] - cmid_) / chalf_;
      double tp = 1.0, tc = mt;
      for (int l = 1; l < L_; ++l) {
        Tm_[l][j] = tc;
        const double tn = 2 * mt * tc - tp;
        tp = tc;
        tc = tn;
      }
    }
  }
}

ChebEngine::Kernel ChebEngine::make_kernel(double tau, bool generator) const {
  Kernel k;
  k.tau = tau;
  k.generator = generator;
  k.a.assign(L_, std::vector<double>(grid_.n, 0.0));
  if (L_ == 1) {
    for (int i = 0; i < grid_.n; ++i) {
      const double f = std::exp(-tau * cmid_ * qb_[i]);
      k.a[0][i] = generator ? -qb_[i] * f : f;
    }
    return k;
  }
  std::vector<double> cth(L_), nodes(L_);
  for (int j = 0; j < L_; ++j) {
    const double th = std::numbers::pi * (j + 0.5) / L_;
    cth[j] = std::cos(th);
    nodes[j] = cmid_ + chalf_ * cth[j];
  }
  std::vector<double> fj(L_);
  for (int i = 0; i < grid_.n; ++i) {
    for (int j = 0; j < L_; ++j) {
      const double f = std::exp(-tau * nodes[j] * qb_[i]);
      fj[j] = generator ? -qb_[i] * f : f;
    }
    for (int l = 0; l < L_; ++l) {
      double s = 0;
      for (int j = 0; j < L_; ++j)
        s += fj[j] * std::cos(l * std::numbers::pi * (j + 0.5) / L_);
      k.a[l][i] = s * (l == 0 ? 1.0 : 2.0) / L_;
    }
  }
  return k;
}

std::vector<double> ChebEngine::apply(const Kernel& k, const std::vector<double>& g) const {
  const int n = grid_.n;
  fft::cvec acc(n, 0.0), work(n);
  for (int l = 0; l < L_; ++l) {
    for (int i = 0; i < n; ++i) work[i] = Tm_[l][i] * g[i];
    fft::transform(work, -1);
    for (int i = 0; i < n; ++i) acc[i] += k.a[l][i] * work[i];
  }
  fft::inverse(acc);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = acc[i].real();
  return out;
}

std::vector<double> ChebEngine::apply_k1(const Kernel& gk, const std::vector<double>& g) const {
  if (!gk.generator) throw PmxError(ErrorCode::CONFIG_INVALID, "apply_k1 needs a generator kernel");
  const int n = grid_.n;
  std::vector<double> mg(n);
  for (int i = 0; i < n; ++i) mg[i] = mvec_[i] * g[i];
  auto bw = apply(gk, g);
  auto bwm = apply(gk, mg);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = mvec_[i] * bw[i] - bwm[i];
  return out;
}

std::vector<double> ChebEngine::inverse_centered(const std::vector<double>& mult, double tau,
                                                 double c, int center) const {
  const int n = grid_.n;
  fft::cvec a(n);
  for (int k = 0; k < n; ++k)
    a[k] = (k % 2 == 0 ? 1.0 : -1.0) * mult[k] * std::exp(-tau * c * qb_[k]);
  fft::transform(a, -1);
  std::vector<double> out(n);
  const double scale = 1.0 / (2.0 * grid_.R);
  for (int j = 0; j < n; ++j) out[j] = scale * a[(j - center + n / 2 + 2 * n) % n].real();
  return out;
}

std::vector<double> ChebEngine::z_column(double tau, int y_index) const {
  std::vector<double> ones(grid_.n, 1.0);
  return inverse_centered(ones, tau, mvec_[y_index], y_index);
}

std::vector<double> ChebEngine::k1_column(double tau, int y_index) const {
  std::vector<double> mult(grid_.n);
  for (int k = 0; k < grid_.n; ++k) mult[k] = -qb_[k];
  auto w = inverse_centered(mult, tau, mvec_[y_index], y_index);
  for (int j = 0; j < grid_.n; ++j) w[j] *= mvec_[j] - mvec_[y_index];
  return w;
}

// ---------------------------------------------------------------------------
// ParametrixSolver
// ---------------------------------------------------------------------------

ParametrixSolver::ParametrixSolver(const LevyTypeModel& model, const SpatialGrid& grid,
                                   SolveOptions opt)
    : model_(&model), engine_(model, grid, opt.cheb_order), opt_(std::move(opt)) {
  build_phi();
}

void ParametrixSolver::build_phi() {
  const SpatialGrid& g = engine_.grid();
  const TimeMesh& mesh = opt_.mesh;
  const int M = mesh.size();
  phi_.mesh = mesh;
  phi_.has_mass_row = opt_.mass_row;
  for (int j = 0; j < g.n; j += opt_.y_stride) phi_.y_indices.push_back(j);
  const int ncols = static_cast<int>(phi_.y_indices.size());
  const int nrows = ncols + (opt_.mass_row ? 1 : 0);
  const std::vector<double> ones(g.n, 1.0);

  // first term: K1 columns (and its y-integral for the mass row)
  std::vector<std::vector<std::vector<double>>> term(
      nrows, std::vector<std::vector<double>>(M));
  for (int ti = 0; ti < M; ++ti) {
    for (int r = 0; r < ncols; ++r) term[r][ti] = engine_.k1_column(mesh.t[ti], phi_.y_indices[r]);
    if (opt_.mass_row)
      term[ncols][ti] = engine_.apply_k1(engine_.make_kernel(mesh.t[ti], true), ones);
  }
  auto sup_of = [&](const std::vector<std::vector<std::vector<double>>>& f) {
    double s = 0;
    for (const auto& row : f)
      for (const auto& v : row)
        for (double x : v) s = std::max(s, std::abs(x));
    return s;
  };
  phi_.phi = term;
  phi_.term_sup = {sup_of(term)};
  phi_.terms = 1;
  if (phi_.term_sup[0] == 0) return;  // constant coefficients: Phi = 0

  if (opt_.check_singularity) {
    // sup_x |K1(t,.,y)| scales like t^{-(delta + 1/sigma)} in the window where
    // the kernel width is still grid-resolved
    std::vector<double> ts, sups;
    for (int ti = 0; ti < M; ++ti) {
      if (mesh.t[ti] < 0.02 || mesh.t[ti] > 0.2) continue;
      double s = 0;
      for (int r = 0; r < ncols; ++r)
        for (double v : term[r][ti]) s = std::max(s, std::abs(v));
      ts.push_back(mesh.t[ti]);
      sups.push_back(s);
    }
    if (ts.size() >= 4) {
      const double slope = loglog_slope(ts, sups);
      const double expected = -(opt_.delta + 1.0 / opt_.sigma);
      if (std::abs(slope - expected) > 0.75)
        throw PmxError(ErrorCode::SINGULARITY_MISMATCH,
                       "first-term decay slope " + std::to_string(slope) + " vs expected " +
                           std::to_string(expected));
    }
  }

  std::vector<std::vector<std::vector<double>>> prev = std::move(term);
  for (int m = 2; m <= opt_.max_terms; ++m) {
    const double gexp = std::max(0.0, 1.0 - (m - 1) * (1.0 - opt_.delta));
    std::vector<std::vector<std::vector<double>>> next(
        nrows, std::vector<std::vector<double>>(M, std::vector<double>(g.n, 0.0)));
    for (int ti = 0; ti < M; ++ti) {
      const auto rule = quad::singular_power_rule_both(mesh.t[ti], opt_.delta, opt_.series_pts);
      for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double s = rule.x[q], w = rule.w[q];
        const auto kern = engine_.make_kernel(mesh.t[ti] - s, true);
        ChebEngine::Kernel kern_s;  // exact K1 at the node for the second term
        if (m == 2 && opt_.mass_row) kern_s = engine_.make_kernel(s, true);
        for (int r = 0; r < nrows; ++r) {
          std::vector<double> gs;
          if (m == 2) {
            gs = (r < ncols) ? engine_.k1_column(s, phi_.y_indices[r])
                             : engine_.apply_k1(kern_s, ones);
          } else {
            gs = interp_field(mesh, prev[r], gexp, s);
          }
          const auto ag = engine_.apply_k1(kern, gs);
          for (int i = 0; i < g.n; ++i) next[r][ti][i] += w * ag[i];
        }
      }
    }
    const double sup = sup_of(next);
    phi_.term_sup.push_back(sup);
    phi_.terms = m;
    for (int r = 0; r < nrows; ++r)
      for (int ti = 0; ti < M; ++ti)
        for (int i = 0; i < g.n; ++i) phi_.phi[r][ti][i] += next[r][ti][i];
    if (series_diverging(phi_.term_sup, opt_.k0))
      throw PmxError(ErrorCode::SERIES_DIVERGING,
                     "parametrix series growing past term " + std::to_string(m));
    if (sup < opt_.series_tol * phi_.term_sup[0]) break;
    prev = std::move(next);
  }
}

std::vector<double> ParametrixSolver::z_part(double t, int y_row) const {
  return engine_.z_column(t, phi_.y_indices[y_row]);
}

std::vector<double> ParametrixSolver::solve_column(double t, int y_row) const {
  auto p = engine_.z_column(t, phi_.y_indices[y_row]);
  if (phi_.term_sup[0] == 0) return p;
  const auto rule = quad::singular_power_rule(t, opt_.delta, opt_.assembly_pts);
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double s = rule.x[q], w = rule.w[q];
    const auto kern = engine_.make_kernel(t - s, false);
    const auto gs = interp_field(phi_.mesh, phi_.phi[y_row], opt_.delta, s);
    const auto zg = engine_.apply(kern, gs);
    for (int i = 0; i < engine_.grid().n; ++i) p[i] += w * zg[i];
  }
  return p;
}

std::vector<double> ParametrixSolver::mass_column(double t) const {
  if (!phi_.has_mass_row)
    throw PmxError(ErrorCode::CONFIG_INVALID, "mass_column requires the phi mass row");
  const std::vector<double> ones(engine_.grid().n, 1.0);
  auto m = engine_.apply(engine_.make_kernel(t, false), ones);
  if (phi_.term_sup[0] == 0) return m;
  const int row = static_cast<int>(phi_.y_indices.size());
  const auto rule = quad::singular_power_rule(t, opt_.delta, opt_.assembly_pts);
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double s = rule.x[q], w = rule.w[q];
    const auto kern = engine_.make_kernel(t - s, false);
    const auto gs = interp_field(phi_.mesh, phi_.phi[row], opt_.delta, s);
    const auto zg = engine_.apply(kern, gs);
    for (int i = 0; i < engine_.grid().n; ++i) m[i] += w * zg[i];
  }
  return m;
}

std::vector<double> ParametrixSolver::lz1(double t, const Point& y) const {
  const SpatialGrid& g = engine_.grid();
  const int yj = std::clamp(static_cast<int>(std::round((y[0] + g.R) / g.h())), 0, g.n - 1);
  const Point ys = pt(g.coord(yj));
  auto zc = engine_.z_column(t, yj);
  auto f = frozen::GridFunction::sampled_periodic(g, std::move(zc));
  std::vector<double> out(g.n);
  for (int j = 0; j < g.n; ++j) {
    const Point x = pt(g.coord(j));
    out[j] = frozen::apply_generator(*model_, f, x, ys, false, g.h()) -
             frozen::apply_generator(*model_, f, x, ys, true, g.h());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

double chapman_kolmogorov_defect(const ParametrixSolver& solver, double t, double s, int y_row) {
  const SpatialGrid& g = solver.engine().grid();
  const auto& yi = solver.y_indices();
  const double hz = g.h() * solver.options().y_stride;
  const auto pts = solver.solve_column(t + s, y_row);
  const auto psc = solver.solve_column(s, y_row);
  std::vector<double> approx(g.n, 0.0);
  for (std::size_t r = 0; r < yi.size(); ++r) {
    const auto ptr = solver.solve_column(t, static_cast<int>(r));
    const double w = hz * psc[yi[r]];
    for (int i = 0; i < g.n; ++i) approx[i] += w * ptr[i];
  }
  double sup = 0, ref = 0;
  for (int i = 0; i < g.n; ++i) {
    sup = std::max(sup, std::abs(pts[i] - approx[i]));
    ref = std::max(ref, std::abs(pts[i]));
  }
  return sup / ref;
}

ResidualReport residual_check(const ParametrixSolver& solver, double t, int y_row,
                              const std::vector<double>& x_probes, double eta) {
  const SpatialGrid& g = solver.engine().grid();
  const auto pp = solver.solve_column(t * (1 + eta), y_row);
  const auto pm = solver.solve_column(t * (1 - eta), y_row);
  auto p0 = solver.solve_column(t, y_row);
  auto f = frozen::GridFunction::sampled_periodic(g, std::move(p0));
  ResidualReport rep;
  double sup_diff = 0, sup_dpdt = 0;
  for (double x : x_probes) {
    const int j = std::clamp(static_cast<int>(std::round((x + g.R) / g.h())), 0, g.n - 1);
    const double dpdt = (pp[j] - pm[j]) / (2 * eta * t);
    const double lp =
        frozen::apply_generator(solver.engine().mdl(), f, pt(g.coord(j)), pt(0), false, g.h());
    rep.dpdt.push_back(dpdt);
    rep.lp.push_back(lp);
    sup_diff = std::max(sup_diff, std::abs(dpdt - lp));
    sup_dpdt = std::max(sup_dpdt, std::abs(dpdt));
  }
  rep.sup_rel = sup_dpdt > 0 ? sup_diff / sup_dpdt : 0.0;
  return rep;
}

}  // namespace pmx::parametrix

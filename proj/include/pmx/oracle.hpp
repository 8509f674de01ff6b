#ifndef PMX_ORACLE_HPP
#define PMX_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "pmx/common.hpp"
#include "pmx/frozen.hpp"
#include "pmx/model.hpp"

namespace pmx::oracle {

// ---------------------------------------------------------------------------
// Closed-form / quadrature reference kernels (1d symmetric stable)
// ---------------------------------------------------------------------------
//
// Density of the process with symbol t * 2 scale C(alpha) |xi|^alpha, the
// continuum (non-periodized) counterpart of the frozen kernel for
// nu = scale |u|^{-1-alpha}.  alpha = 1 is the Cauchy closed form
// t_s/(t_s^2 + x^2)/pi with t_s = pi scale t; other alpha in (0,2) go through
// an adaptive oscillatory quadrature of the Fourier inversion (no FFT).

double closed_form_stable(double alpha, double scale, double t, double x,
                          bool force_quadrature = false);

// Distribution function of the same law.
double closed_form_stable_cdf(double alpha, double scale, double t, double x);

// ---------------------------------------------------------------------------
// Path simulation
// ---------------------------------------------------------------------------

struct PathEnsemble {
  std::vector<double> times;                   // ascending
  std::vector<std::vector<Point>> positions;   // [time][path]
  int n_paths = 0;
  double eps = 0;      // small-jump cutoff
  int n_steps = 0;     // Euler steps over [0, max time]
  std::uint64_t seed = 0;

  std::vector<double> axis(std::size_t time_index, int ax = 0) const;
};

// Euler scheme: drift step, large jumps (|u| > eps) by thinning a dominating
// b2-rate compound Poisson sampler, small jumps replaced by a Gaussian with
// the matched variance.  Per-path RNG streams: mt19937_64 seeded with
// splitmix64(seed ^ path index), so the ensemble is independent of scheduling.
// n_steps = 0 picks the step count from the dominating rate; an explicit
// n_steps with rate * dt > 0.1 throws RATE_OVERFLOW.  Tempered densities are
// not supported.
PathEnsemble simulate_paths(const model::LevyTypeModel& model, const std::vector<double>& times,
                            const Point& x0, int n_paths, double eps, std::uint64_t seed,
                            int n_steps = 0);

// ---------------------------------------------------------------------------
// Empirical-vs-kernel comparison
// ---------------------------------------------------------------------------

struct KernelReport {
  double ks = 0;               // KS distance, samples folded into the box
  double sup_bulk = 0;         // binned density vs p, relative to max p, |y| <= R/2
  double tail_model = 0;       // kernel mass outside |y| <= R/2
  double tail_empirical = 0;
  int n = 0;
};

// Compare 1d terminal positions with a kernel row p(t, x0, y_j) on the grid.
// Samples are wrapped into [-R, R) to match the periodized kernel.
KernelReport empirical_vs_kernel(const std::vector<double>& samples,
                                 const frozen::SpatialGrid& grid,
                                 const std::vector<double>& p_row);

// KS distance of raw (unfolded) samples against an arbitrary CDF.
double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

}  // namespace pmx::oracle

#endif

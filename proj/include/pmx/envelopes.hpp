#ifndef PMX_ENVELOPES_HPP
#define PMX_ENVELOPES_HPP

#include <string>
#include <vector>

#include "pmx/common.hpp"
#include "pmx/frozen.hpp"
#include "pmx/model.hpp"
#include "pmx/parametrix.hpp"

namespace pmx::envelopes {

// ---------------------------------------------------------------------------
// Atomic measures on the spatial grid
// ---------------------------------------------------------------------------
//
// All hierarchy measures are discretized as atoms at the grid nodes, which
// makes * (space convolution) and the time-space convolution closed
// operations. Convolutions wrap around the box.

struct GridMeasure {
  frozen::SpatialGrid grid;
  std::vector<double> w;  // nonnegative node weights
  std::string tag;
  double t = 0;

  double mass() const;
};

// circular convolution of atom weights (mass multiplicative)
GridMeasure measure_convolve(const GridMeasure& a, const GridMeasure& b);

// unit atom at the origin node
GridMeasure unit_atom(const frozen::SpatialGrid& g);

// Lambda_t = t mu restricted to rho_t ||u|| > 1, cell-integrated onto nodes;
// the mass beyond the box is folded into the outermost nodes so the total is
// exact.
GridMeasure lambda_measure(const model::LevyTypeModel& model, const model::ScaleProfile& profile,
                           double t, const frozen::SpatialGrid& grid);

// sum_{m<=K} Q^{*m}/m!  (no normalization)
GridMeasure exp_measure(const GridMeasure& q, int K);

// P_t = e^{-Lambda(R)} sum Lambda^{*k}/k!; truncation tail reported
GridMeasure poisson_exponential(const GridMeasure& lam, int K = 20, double* tail = nullptr);

// P_{t,gamma} = (1 + rho^gamma (||w||^gamma ^ 1)) P_t
GridMeasure tilt_measure(const GridMeasure& p, double gamma, double rho_t);

// ---------------------------------------------------------------------------
// G hierarchy
// ---------------------------------------------------------------------------

struct Hierarchy {
  parametrix::TimeMesh mesh;
  frozen::SpatialGrid grid;
  double lambda = 0.5, sigma = 1, delta = 0.5, A = 0.1;
  int k0 = 5, K_pi = 13;
  std::vector<double> rho;                  // per mesh time
  std::vector<GridMeasure> lam, P, Ptl, Pi, Q;
  std::vector<std::vector<GridMeasure>> Gk;  // Gk[k-1][ti], k = 1..K_pi
  std::vector<std::vector<double>> gk_mass;  // same layout

  const std::vector<GridMeasure>& G() const { return Gk[0]; }
};

// k0 = [sigma(alpha+1)/(alpha lambda)] + 1
int k0_index(double alpha, double sigma, double lambda);

// A defaults below 1: the truncated Pi series is Mittag-Leffler-like and its
// terms would otherwise keep growing past K_pi at the top of the ladder even
// though the full series converges for every A.
Hierarchy g_hierarchy(const model::LevyTypeModel& model, const model::ScaleProfile& profile,
                      const parametrix::TimeMesh& mesh, const frozen::SpatialGrid& grid,
                      double lambda, int K_pi = 0, double A = 0.1, int pts = 8);

// mass of the time-space convolution (P .star. Pi)_t
double p_star_pi_mass(const Hierarchy& h, double t, int pts = 10);

// ---------------------------------------------------------------------------
// Envelope evaluation and fitting
// ---------------------------------------------------------------------------

struct EnvelopeParams {
  double a1 = 0, a2 = 0;  // f_lower = a1 (1 - a2|x|)_+
  double a3 = 0, a4 = 0;  // f_upper = a3 e^{-a4|x|}
  double A = 1;
  int K_poisson = 20;
  int K_pi = 13;
  double margin_lower = 0, margin_upper = 0;  // verification margins (held-out)
};

// sum_m (1/m!) int rho^n f_upper((x-z) rho) Q^{*m}(dz); pass exp_measure(Q,M)
double eval_upper_envelope(double x, double rho_t, const EnvelopeParams& par,
                           const GridMeasure& exp_q);
// whole-grid version (one circular convolution)
std::vector<double> upper_envelope_row(double rho_t, const EnvelopeParams& par,
                                       const GridMeasure& exp_q);

// a1 rho^n (1 - a2 rho |x|)_+
double eval_lower_bound(double x, double rho_t, const EnvelopeParams& par);

struct FitSample {
  double t = 0;
  double y = 0;                // column base point
  std::vector<double> p;       // p(t, x_j, y) over the grid
};

// Log-lattice search: smallest feasible (a3, a4) and largest feasible
// (a1, a2), lexicographically in the listed order, such that
// lower <= p <= upper on every fitting sample. Throws NO_FEASIBLE_PARAMS.
EnvelopeParams fit_envelope_constants(const std::vector<FitSample>& fits, const Hierarchy& h,
                                      const model::ScaleProfile& profile, int lattice = 32,
                                      double a_lo = 1e-3, double a_hi = 1e2);

}  // namespace pmx::envelopes

#endif

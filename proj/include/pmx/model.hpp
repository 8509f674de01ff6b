#ifndef PMX_MODEL_HPP
#define PMX_MODEL_HPP

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pmx/common.hpp"

namespace pmx::model {

// ---------------------------------------------------------------------------
// Base Levy measure mu(du) = nu(|u|) du + atoms, isotropic density selectors.
// ---------------------------------------------------------------------------

enum class DensityKind { NONE, POWER, TRUNCATED_POWER, TEMPERED_POWER };

struct DensitySpec {
  DensityKind kind = DensityKind::POWER;
  double alpha = 1.0;   // tail index, nu ~ scale * |u|^{-n-alpha}
  double scale = 1.0;
  double cutoff = 1.0;  // TRUNCATED_POWER: support |u| <= cutoff
  double kappa = 1.0;   // TEMPERED_POWER: extra factor e^{-kappa|u|}
};

struct Atom {
  Point u{};
  double w = 0;
};

struct QuadratureSpec {
  double eps_in = 1e-8;   // inner radial cutoff (head handled analytically)
  double r_out = 1e8;     // outer radial cutoff (tail handled analytically)
  double ratio = 1.25;    // geometric interval growth
  int pts = 8;            // Gauss points per interval
  int angles = 64;        // direction count for n = 2
  double osc_wavelengths = 0.25;  // interval length cap, in units of 2pi/|xi|
  double osc_span = 200.0;        // resolve oscillations up to osc_span/|xi|
};

struct LevyBaseMeasure {
  int dim = 1;
  DensitySpec density;
  std::vector<Atom> atoms;
  QuadratureSpec quad;

  bool has_density() const { return density.kind != DensityKind::NONE; }
  // nu as a function of radius r > 0 (value of the density at |u| = r).
  double radial_density(double r) const;
  double radial_density_deriv(double r) const;
  // Effective outer radius of the density support.
  double support_radius() const;
  // \int_a^b nu(s) s^{n-1} ds  (one ray; multiply by angular factor yourself).
  double ray_mass(double a, double b) const;
  // \int_0^eps s^2 nu(s) s^{n-1} ds (analytic head for the power selectors).
  double ray_second_moment_head(double eps) const;
};

// ---------------------------------------------------------------------------
// Coefficients m(x,u) and a(x)
// ---------------------------------------------------------------------------

enum class ModulationKind { CONSTANT, BUMP, CUSTOM };

struct ModulationField {
  ModulationKind kind = ModulationKind::CONSTANT;
  double m0 = 1.0;  // CONSTANT value / BUMP base
  double c = 0.0;   // BUMP: m(x) = m0 + c * (1 ∧ |x|)
  // CUSTOM: arbitrary m(x,u); disables the separable fast paths.
  std::function<double(const Point&, const Point&)> custom;

  double b1 = 1.0, b2 = 1.0;      // A2 bounds
  double b3 = 0.0;                // A3 Holder constant
  double lambda_holder = 1.0;     // A3 exponent, in (0, 2/beta]

  bool u_dependent() const { return kind == ModulationKind::CUSTOM; }
  double operator()(const Point& x, const Point& u, int n) const;
};

enum class DriftKind { ZERO, CONSTANT };

struct DriftField {
  DriftKind kind = DriftKind::ZERO;
  Point a0{};
  bool is_zero() const { return kind == DriftKind::ZERO; }
  Point operator()(const Point& x) const;
};

struct LevyTypeModel {
  LevyBaseMeasure base;
  ModulationField modulation;
  DriftField drift;
  double beta = 2.0;       // A1 constant
  bool symmetric = true;   // mu(x,du) symmetric in u
  double alpha() const { return 2.0 / beta; }
  int dim() const { return base.dim; }
};

// ---------------------------------------------------------------------------
// Symbol-level quantities
// ---------------------------------------------------------------------------

// q^U(xi) = \int (xi.u)^2 ∧ 1 mu(du),  q^L(xi) = \int_{|xi.u|<=1} (xi.u)^2 mu(du)
std::pair<double, double> q_upper_lower(const LevyBaseMeasure& base, const Point& xi);

// q*(r) = sup over directions of q^U(r l).
double q_star(const LevyBaseMeasure& base, double r);

// Characteristic exponent of the frozen generator,
// q(y,xi) = -i a(y).xi + \int (1 - e^{i xi.u} + i xi.u 1_{|u|<=1}) m(y,u) mu(du).
// With refine=true the radial rule is refined once and QUADRATURE_UNRESOLVED is
// thrown when the two values disagree beyond rel_tol.
std::complex<double> q_exponent(const LevyTypeModel& model, const Point& y, const Point& xi,
                                bool refine = false, double rel_tol = 1e-6);

// Density-only symbol at frozen modulation 1 (real by isotropy of nu).
// q(y,xi) for u-independent m equals m(y)*q_base(|xi|) + drift + atom terms.
double q_base_density(const LevyBaseMeasure& base, double xi_norm);

// ---------------------------------------------------------------------------
// Scale profile rho_t and growth exponents
// ---------------------------------------------------------------------------

struct ScaleProfile {
  LevyBaseMeasure base;
  double beta_declared = 2.0;
  double alpha = 1.0;          // 2/beta
  double sigma = 1.0;          // minimal lower-envelope exponent found by scan
  double c1 = 1.0, c2 = 1.0;   // rho_t <= c1 t^{-1/alpha}, rho_t >= c2 t^{-1/sigma}
  std::vector<double> t_ladder;
  std::vector<double> rho_table;
  double bisect_tol = 1e-10;

  double q_star(double r) const { return pmx::model::q_star(base, r); }
  double rho(double t) const;  // bisection solve of q*(r) = 1/t
};

// Build profile with a geometric t-ladder on [t_min, 1]; fits alpha band
// constants and runs the sigma scan.
ScaleProfile build_profile(const LevyTypeModel& model, double t_min = 0.01,
                           int pts_per_decade = 8);

// sigma scan + envelope constants on an existing rho table.
// Returns (alpha, sigma, c1, c2).
std::array<double, 4> fit_exponents(ScaleProfile& profile);

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

struct SamplePlan {
  std::vector<double> r_grid;           // radii for A1 (large-r = r >= 1)
  int directions = 16;                  // sphere resolution for sup/inf
  std::vector<Point> x_samples;         // for A2/A3
  std::vector<Point> u_samples;         // for A2/A3 and symmetry
  static SamplePlan standard(int dim);
};

struct ValidationReport {
  bool a1 = false, a2 = false, a3 = false;
  bool symmetry_ok = true, drift_ok = true;
  bool passed = false;
  double beta_hat = 0;        // sup_l q^U / inf_l q^L over large r
  double levy_integral = 0;   // \int (1 ∧ |u|^2) mu(du)
  double qstar_growth = 0;    // log-log slope of q* over the large-r grid
  std::vector<std::string> failures;  // FAILS_A1 / FAILS_A2 / FAILS_A3 / FAILS_SYMMETRY
};

ValidationReport validate_model(const LevyTypeModel& model, const SamplePlan& plan);

// ---------------------------------------------------------------------------
// Bundled model builders (see scenarios/)
// ---------------------------------------------------------------------------

LevyTypeModel make_stable_model(int dim, double alpha, double scale = 1.0);
LevyTypeModel make_modulated_stable_model(double alpha, double bump, double lambda_holder);
LevyTypeModel make_truncated_stable_model(double alpha, double cutoff = 1.0);

}  // namespace pmx::model

#endif

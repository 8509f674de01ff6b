#ifndef PMX_KATO_HPP
#define PMX_KATO_HPP

#include <functional>
#include <vector>

#include "pmx/common.hpp"
#include "pmx/model.hpp"

namespace pmx::kato {

// ---------------------------------------------------------------------------
// Finite Borel measures (1D): atoms plus an optional uniform density part
// ---------------------------------------------------------------------------

enum class DensityPart { NONE, UNIFORM };

struct MeasureSpec {
  std::vector<std::pair<double, double>> atoms;  // (x_i, w_i > 0)
  DensityPart density = DensityPart::NONE;
  double d_lo = -1, d_hi = 1, d_value = 1;

  double mass() const;
  double ball_mass(double x, double r) const;  // w{ y : |y-x| <= r }
};

MeasureSpec make_point_mass(double x = 0, double w = 1);
MeasureSpec make_uniform_measure(double lo, double hi, double value = 1);
// level-k self-similar approximation of the Cantor measure on [0,1]
// (2^k atoms of mass 2^{-k} at the level-k interval midpoints)
MeasureSpec make_cantor_measure(int depth = 10);

// atom locations plus a uniform grid over the support hull padded by 1
std::vector<double> default_x_samples(const MeasureSpec& spec, int grid_pts = 17);

// ---------------------------------------------------------------------------
// The potential U and the class criteria
// ---------------------------------------------------------------------------

// U(r) = int_1^{1/r} s^{n-1}/q*(s) ds, r in (0,1]; U(1) = 0.
double u_potential(const model::ScaleProfile& profile, double r);

// U'(r) = -1/(r^{n+1} q*(1/r))
double u_potential_deriv(const model::ScaleProfile& profile, double r);

struct CriterionResult {
  double value = 0;                // supremum over x of the criterion integral
  bool divergent = false;          // inner-cutoff refinement ladder blew up
  std::vector<double> ladder;      // value per refinement step (sup over x)
};

// Dynkin: sup_x int_{|y-x|<=radius} U(|y-x|) w(dy). Atoms evaluated directly,
// the density part by quadrature; atoms at the center probe the inner-cutoff
// ladder (a ladder growing beyond 10x its median is declared divergent).
CriterionResult dynkin_criterion(const model::ScaleProfile& profile, const MeasureSpec& spec,
                                 const std::vector<double>& x_samples, double radius = 1.0);

struct KatoResult {
  std::vector<double> deltas;
  std::vector<double> values;  // sup_x criterion value per delta
  bool vanishing = false;      // values decrease below 5% of the first entry
  bool divergent = false;
};

KatoResult kato_criterion(const model::ScaleProfile& profile, const MeasureSpec& spec,
                          const std::vector<double>& x_samples,
                          const std::vector<double>& delta_ladder);

// Corollary form: sup_x int_0^1 w{|y-x|<=r} / (r^{n+1} q*(1/r)) dr; agrees
// with the Dynkin integral up to fixed multiplicative constants.
CriterionResult criterion_alt(const model::ScaleProfile& profile, const MeasureSpec& spec,
                              const std::vector<double>& x_samples);

struct SufficientResult {
  double d_hat = 0;  // log-log regression of sup_x ball mass
  bool holds = false;
};

SufficientResult sufficient_condition_check(const MeasureSpec& spec,
                                            const std::vector<double>& x_samples, double alpha,
                                            int n, int r_levels = 7);

// ---------------------------------------------------------------------------
// Direct definitions via the computed kernel
// ---------------------------------------------------------------------------

struct DirectReport {
  std::vector<double> t;
  std::vector<double> value;       // sup_x int_0^t int p(s,x,y) w(dy) ds
  std::vector<double> cut_ladder;  // inner-cutoff ladder at the smallest t
  bool divergent = false;          // S_D fails
  bool vanishing = false;          // S_K trend: value -> 0 along the ladder
};

// p(s, x, y): transition density callable; the t-ladder must reach small
// enough t to resolve the limit trend (otherwise KERNEL_RANGE).
DirectReport direct_class_check(const std::function<double(double, double, double)>& p,
                                const MeasureSpec& spec, const std::vector<double>& t_ladder,
                                const std::vector<double>& x_samples);

enum class ClassVerdict { IN_SK, IN_SD_ONLY, OUT, INCONCLUSIVE };

ClassVerdict classify(const CriterionResult& dynkin, const KatoResult& kato);

}  // namespace pmx::kato

#endif

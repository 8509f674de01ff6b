#ifndef PMX_PARAMETRIX_HPP
#define PMX_PARAMETRIX_HPP

#include <vector>

#include "pmx/common.hpp"
#include "pmx/frozen.hpp"
#include "pmx/model.hpp"

namespace pmx::parametrix {

// ---------------------------------------------------------------------------
// Time mesh and compensated interpolation
// ---------------------------------------------------------------------------

struct TimeMesh {
  std::vector<double> t;  // geometric
  static TimeMesh geometric(double t_min, double t_max, int pts_per_decade);
  int size() const { return static_cast<int>(t.size()); }
};

// Interpolate rows[i] ~ f(t_i) at time s, where f(s) s^{gexp} is smooth in
// log s. Cubic in log t on the compensated values; power extrapolation below
// the mesh, capped extension slightly above it.
std::vector<double> interp_field(const TimeMesh& mesh,
                                 const std::vector<std::vector<double>>& rows, double gexp,
                                 double s);

// Series divergence guard: true when `ratios beyond k0 stay above 1 for three
// consecutive terms` (throwing is left to the caller).
bool series_diverging(const std::vector<double>& term_sups, int k0);

// ---------------------------------------------------------------------------
// Plain space convolution (h-weighted, kernel sampled at offsets w_j)
// ---------------------------------------------------------------------------

std::vector<double> space_convolution_fft(const frozen::SpatialGrid& g,
                                          const std::vector<double>& kernel,
                                          const std::vector<double>& f);
std::vector<double> space_convolution_gemm(const frozen::SpatialGrid& g,
                                           const std::vector<double>& kernel,
                                           const std::vector<double>& f);

// \int_0^t space_convolution(f(t-s), g(s)) ds with g given on the mesh
// (g ~ s^{-gexp} near 0, absorbed by the singular quadrature).
std::vector<double> spacetime_convolution(const frozen::SpatialGrid& grid, const TimeMesh& mesh,
                                          const std::function<std::vector<double>(double)>& f_kernel,
                                          const std::vector<std::vector<double>>& g_rows,
                                          double gexp, double t, int pts = 10);

// ---------------------------------------------------------------------------
// Spectral Chebyshev engine (1d, symmetric, separable, zero drift)
// ---------------------------------------------------------------------------
//
// Z(tau,x,z) = p_{tau,z}(x-z) with spectrum e^{-tau m(z) qb(xi)}; expanding in
// Chebyshev polynomials of m(z) turns \int K(tau,x-z;m(z)) g(z) dz into a few
// circular convolutions evaluated by FFT on the fine grid.

class ChebEngine {
 public:
  ChebEngine(const model::LevyTypeModel& model, const frozen::SpatialGrid& grid, int L = 6);

  const frozen::SpatialGrid& grid() const { return grid_; }
  const model::LevyTypeModel& mdl() const { return *model_; }
  int cheb_order() const { return L_; }
  double modulation_at(int j) const { return mvec_[j]; }

  struct Kernel {
    double tau = 0;
    bool generator = false;
    std::vector<std::vector<double>> a;  // a[l][k]: Chebyshev spectral coefficients
  };

  // generator=false: Z-kernel e^{-tau c qb}; true: W-kernel -qb e^{-tau c qb}.
  Kernel make_kernel(double tau, bool generator) const;

  // B[g](x) = \int K(tau, x-z; m(z)) g(z) dz
  std::vector<double> apply(const Kernel& k, const std::vector<double>& g) const;
  // A[g](x) = \int K1(tau,x,z) g(z) dz = m(x) Bw[g](x) - Bw[m g](x)
  std::vector<double> apply_k1(const Kernel& gen_kernel, const std::vector<double>& g) const;

  // columns over fine x at a fixed frozen index (exact in c, one FFT)
  std::vector<double> z_column(double tau, int y_index) const;
  std::vector<double> k1_column(double tau, int y_index) const;

 private:
  std::vector<double> inverse_centered(const std::vector<double>& mult, double tau, double c,
                                       int center) const;
  const model::LevyTypeModel* model_;
  frozen::SpatialGrid grid_;
  int L_;
  double cmid_, chalf_;
  std::vector<double> qb_;                // base symbol on the dual grid
  std::vector<double> mvec_;              // m(z_j)
  std::vector<std::vector<double>> Tm_;   // T_l(m~(z_j))
};

// ---------------------------------------------------------------------------
// Parametrix iteration
// ---------------------------------------------------------------------------

struct SolveOptions {
  TimeMesh mesh = TimeMesh::geometric(1e-3, 1.0, 8);
  int y_stride = 16;         // fine-grid stride between frozen columns
  double delta = 0.5;        // 1 - lambda/sigma
  double sigma = 1.0;
  int cheb_order = 6;
  int series_pts = 6;        // per-half singular nodes in the iteration integrals
  int assembly_pts = 10;     // singular nodes in the final Z*Phi integral
  double series_tol = 1e-4;
  int k0 = 5;                // guaranteed-decay index for the divergence guard
  int max_terms = 16;
  bool check_singularity = true;
  bool mass_row = true;      // carry \int Phi(s,z,y) dy as an extra column
};

struct PhiField {
  TimeMesh mesh;
  std::vector<int> y_indices;  // fine-grid indices of the frozen columns
  bool has_mass_row = false;   // extra final row: \int Phi dy
  // phi[row][ti][xj]; rows = y columns (+ mass row)
  std::vector<std::vector<std::vector<double>>> phi;
  std::vector<double> term_sup;
  int terms = 0;
};

class ParametrixSolver {
 public:
  ParametrixSolver(const model::LevyTypeModel& model, const frozen::SpatialGrid& grid,
                   SolveOptions opt);

  const ChebEngine& engine() const { return engine_; }
  const SolveOptions& options() const { return opt_; }
  const PhiField& phi() const { return phi_; }
  const std::vector<int>& y_indices() const { return phi_.y_indices; }

  // (L_x - L_y) Z(t,.,y) over the fine grid via the generator quadrature.
  std::vector<double> lz1(double t, const Point& y) const;

  // p(t, ., y_row) over the fine grid; y_row indexes y_indices().
  std::vector<double> solve_column(double t, int y_row) const;
  std::vector<double> z_part(double t, int y_row) const;

  // \int p(t,x,y) dy over fine x (Fubini through the phi mass row).
  std::vector<double> mass_column(double t) const;

 private:
  void build_phi();
  const model::LevyTypeModel* model_;
  ChebEngine engine_;
  SolveOptions opt_;
  PhiField phi_;
};

// sup-norm relative defect of p(t+s,.,y) vs \int p(t,.,z) p(s,z,y) dz over the
// frozen columns.
double chapman_kolmogorov_defect(const ParametrixSolver& solver, double t, double s, int y_row);

struct ResidualReport {
  double sup_rel = 0;
  std::vector<double> dpdt, lp;  // at the probe points
};

// |d_t p - L_x p| / max|d_t p| at the probe points, d_t by refined centered
// differences in t.
ResidualReport residual_check(const ParametrixSolver& solver, double t, int y_row,
                              const std::vector<double>& x_probes, double eta = 0.02);

}  // namespace pmx::parametrix

#endif

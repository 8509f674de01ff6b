#ifndef PMX_FROZEN_HPP
#define PMX_FROZEN_HPP

#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "pmx/common.hpp"
#include "pmx/model.hpp"

namespace pmx::frozen {

// Uniform periodic grid on [-R, R)^dim, n points per axis (power of two).
// Dual grid: xi_k = (pi/R) k' with k' the signed index.
struct SpatialGrid {
  int dim = 1;
  int n = 1024;
  double R = 20.0;

  double h() const { return 2.0 * R / n; }
  int size() const { return dim == 1 ? n : n * n; }
  double coord(int j) const { return -R + j * h(); }
  double freq(int k) const {
    const int kk = k < n / 2 ? k : k - n;
    return std::numbers::pi / R * kk;
  }
  Point point(int flat) const {
    if (dim == 1) return pt(coord(flat));
    return pt(coord(flat / n), coord(flat % n));
  }
  bool compatible(const SpatialGrid& o) const {
    return dim == o.dim && n == o.n && R == o.R;
  }
};

// Base symbol sampled on the dual grid: q(y,xi) = m(y)(re + i im) - i a(y).xi
// for u-independent modulation. re includes the density and even atom parts,
// im the odd atom part (zero for symmetric measures).
struct SymbolTable {
  SpatialGrid grid;
  std::vector<double> re, im;
  bool separable = true;  // false: per-y direct evaluation required
};

SymbolTable build_symbol_table(const model::LevyTypeModel& model, const SpatialGrid& grid);

// Periodized frozen kernel p_{t,y} sampled at offsets w_j = -R + j h
// (row-major in 2d). Grid-resolution checks throw GRID_UNDERRESOLVED when
// enabled: insufficient symbol decay at Nyquist or significant negativity.
std::vector<double> frozen_density(const model::LevyTypeModel& model, const SymbolTable& table,
                                   double t, const Point& y, bool check = true);

// First spatial derivative of the frozen kernel along the given axis.
std::vector<double> frozen_gradient(const model::LevyTypeModel& model, const SymbolTable& table,
                                    double t, const Point& y, int axis = 0);

// Action of the unit-modulation jump generator on the frozen kernel:
// inverse transform of -(re + i im)(xi) e^{-t q(y,xi)}. The building block of
// the parametrix iteration for separable models.
std::vector<double> frozen_base_generator(const model::LevyTypeModel& model,
                                          const SymbolTable& table, double t, const Point& y);

// Grid function: either sampled on a grid (cubic interpolation; zero beyond
// the box, or wrapped around for periodic fields such as spectral kernel
// columns) or an analytic callable.
struct GridFunction {
  const SpatialGrid* grid = nullptr;
  std::vector<double> values;
  std::function<double(const Point&)> fn;
  bool periodic = false;
  double mean = 0.0;  // period average, used for the far jump tail

  bool analytic() const { return static_cast<bool>(fn); }
  double operator()(const Point& x) const;

  static GridFunction sampled(const SpatialGrid& g, std::vector<double> v);
  static GridFunction sampled_periodic(const SpatialGrid& g, std::vector<double> v);
  static GridFunction of(std::function<double(const Point&)> f);
};

// (L f)(x) with modulation/drift frozen at y (frozen=true) or moving with the
// integration variable (frozen=false). Jumps below ~2*fd_step are replaced by
// their second-order Taylor contribution; derivatives use centered differences
// with step fd_step.
double apply_generator(const model::LevyTypeModel& model, const GridFunction& f, const Point& x,
                       const Point& y, bool frozen, double fd_step);

}  // namespace pmx::frozen

#endif

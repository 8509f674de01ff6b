#ifndef PMX_COMMON_HPP
#define PMX_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmx {

// Spatial point, dimension 1 or 2.  Unused components are zero.
using Point = std::array<double, 2>;

inline Point pt(double x) { return {x, 0.0}; }
inline Point pt(double x, double y) { return {x, y}; }

inline double dot(const Point& a, const Point& b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a, int n) { return std::sqrt(dot(a, a, n)); }

enum class ErrorCode {
  QUADRATURE_UNRESOLVED,
  GRID_UNDERRESOLVED,
  RHO_UNDEFINED,
  SERIES_DIVERGING,
  SINGULARITY_MISMATCH,
  NO_FEASIBLE_PARAMS,
  RATE_OVERFLOW,
  KERNEL_RANGE,
  CONFIG_INVALID,
  GRID_MISMATCH,
  STAGE_FAILED,
  UNSUPPORTED_ALPHA,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::QUADRATURE_UNRESOLVED: return "QUADRATURE_UNRESOLVED";
    case ErrorCode::GRID_UNDERRESOLVED: return "GRID_UNDERRESOLVED";
    case ErrorCode::RHO_UNDEFINED: return "RHO_UNDEFINED";
    case ErrorCode::SERIES_DIVERGING: return "SERIES_DIVERGING";
    case ErrorCode::SINGULARITY_MISMATCH: return "SINGULARITY_MISMATCH";
    case ErrorCode::NO_FEASIBLE_PARAMS: return "NO_FEASIBLE_PARAMS";
    case ErrorCode::RATE_OVERFLOW: return "RATE_OVERFLOW";
    case ErrorCode::KERNEL_RANGE: return "KERNEL_RANGE";
    case ErrorCode::CONFIG_INVALID: return "CONFIG_INVALID";
    case ErrorCode::GRID_MISMATCH: return "GRID_MISMATCH";
    case ErrorCode::STAGE_FAILED: return "STAGE_FAILED";
    case ErrorCode::UNSUPPORTED_ALPHA: return "UNSUPPORTED_ALPHA";
  }
  return "UNKNOWN";
}

class PmxError : public std::runtime_error {
 public:
  PmxError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace pmx

#endif

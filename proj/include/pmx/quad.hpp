#ifndef PMX_QUAD_HPP
#define PMX_QUAD_HPP

#include <functional>
#include <vector>

namespace pmx::quad {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;

  void append(const Rule& other);
  double integrate(const std::function<double(double)>& f) const;
  std::size_t size() const { return x.size(); }
};

// Gauss-Legendre nodes/weights on [-1,1].
Rule gauss_legendre(int n);

// Gauss-Legendre mapped to [a,b].
Rule gauss_legendre(int n, double a, double b);

// Composite rule on [a,b] (0 < a < b) with geometrically growing subintervals
// of ratio `ratio`, each subinterval length additionally capped at `max_len`
// (ignored if max_len <= 0), `pts` Gauss points per subinterval.
Rule geometric_composite(double a, double b, double ratio, double max_len, int pts);

// Rule for \int_0^t s^{-delta} h(s) ds with h smooth: substitution
// s = t*tau^{1/(1-delta)} maps the endpoint singularity away; Gauss in tau.
// Returned nodes are in s, weights include the full Jacobian so that
// sum w_i f(s_i) ~ \int_0^t f(s) ds for f with an s^{-delta} endpoint factor.
Rule singular_power_rule(double t, double delta, int pts);

// Two-sided version for integrands singular like s^{-delta} at s->0 and
// (t-s)^{-delta} at s->t: split at t/2, power map on each half.
Rule singular_power_rule_both(double t, double delta, int pts);

}  // namespace pmx::quad

#endif

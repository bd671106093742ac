#include "flowood/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "flowood/error.hpp"

namespace flowood {

double finite_diff_check(const ScalarFunction& f, std::span<const double> x,
                         std::span<const double> analytic_grad, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_check: step must be positive");
  if (x.size() != analytic_grad.size())
    throw DimensionError("finite_diff_check: gradient length mismatch");
  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + h;
    const double up = f(probe);
    probe[i] = saved - h;
    const double down = f(probe);
    probe[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err =
        std::abs(numeric - analytic_grad[i]) / (std::abs(analytic_grad[i]) + h);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace flowood

#pragma once

#include <functional>
#include <span>

namespace flowood {

using ScalarFunction = std::function<double(std::span<const double>)>;

// Max over coordinates of |central difference - analytic| / (|analytic| + h).
double finite_diff_check(const ScalarFunction& f, std::span<const double> x,
                         std::span<const double> analytic_grad, double h);

}  // namespace flowood

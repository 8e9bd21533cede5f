#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

namespace usdot::detail {

// Positive half of the 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<std::pair<double, double>, 8> kGaussLegendre16 = {{
    {0.095012509837637454, 0.18945061045506859},
    {0.28160355077925892, 0.18260341504492361},
    {0.45801677765722737, 0.16915651939500262},
    {0.61787624440264377, 0.14959598881657676},
    {0.755404408355003, 0.12462897125553403},
    {0.86563120238783176, 0.095158511682492591},
    {0.9445750230732326, 0.062253523938647706},
    {0.98940093499164994, 0.027152459411754037},
}};

/// Composite 16-point Gauss-Legendre on [a, b] with panels no wider than
/// `max_panel`.
template <class F>
double gauss_legendre(F&& f, double a, double b, double max_panel) {
  if (!(b > a)) return 0.0;
  const int panels =
      std::max(1, static_cast<int>(std::ceil((b - a) / max_panel)));
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    double sum = 0.0;
    for (const auto& [node, weight] : kGaussLegendre16) {
      sum += weight * (f(mid - half * node) + f(mid + half * node));
    }
    total += sum * half;
  }
  return total;
}

}  // namespace usdot::detail

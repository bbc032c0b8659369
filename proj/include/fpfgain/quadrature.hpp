#pragma once

#include <functional>
#include <vector>

namespace fpfgain {

struct QuadratureOptions
{
  double abs_tolerance = 1e-10;
  int max_panels = 4096;
  /// Number of equal panels the interval is split into before adaptive refinement.
  int initial_panels = 8;
};

/// Adaptive 15-point Gauss-Kronrod integration with an absolute error target.
///
/// The panel with the largest Kronrod/Gauss error estimate is bisected until the
/// summed estimate drops below abs_tolerance. Throws NumericalError when
/// max_panels is reached with the target unmet.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options = {});

/// Same as integrate, but splits at the given interior breakpoints first
/// (kinks and discontinuities of the integrand).
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breakpoints, const QuadratureOptions& options = {});

} // namespace fpfgain

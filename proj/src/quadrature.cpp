#include "fpfgain/quadrature.hpp"

#include "fpfgain/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <queue>

namespace fpfgain {

namespace {

struct Panel
{
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel evaluate_panel(const std::function<double(double)>& f, double a, double b)
{
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& nodes = Kronrod::abscissa();
  const auto& kw = Kronrod::weights();
  const auto& gw = Gauss::weights();

  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  // Kronrod node 0 is the centre; even-indexed nodes are shared with the 7-point Gauss rule.
  const double fc = f(mid);
  double kronrod = fc * kw[0];
  double gauss = fc * gw[0];
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double pair = f(mid + half * nodes[i]) + f(mid - half * nodes[i]);
    kronrod += pair * kw[i];
    if (i % 2 == 0) gauss += pair * gw[i / 2];
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& options)
{
  return integrate(f, a, b, {}, options);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breakpoints, const QuadratureOptions& options)
{
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw InvalidParameter("integration limits must be finite");
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, breakpoints, options);

  std::vector<double> edges{a};
  std::vector<double> interior;
  for (double p : breakpoints)
    if (p > a && p < b) interior.push_back(p);
  std::sort(interior.begin(), interior.end());
  edges.insert(edges.end(), interior.begin(), interior.end());
  edges.push_back(b);

  std::priority_queue<Panel> panels;
  const int per_segment = std::max(options.initial_panels, 1);
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const double width = (edges[s + 1] - edges[s]) / per_segment;
    for (int k = 0; k < per_segment; ++k) {
      const double lo = edges[s] + k * width;
      const double hi = (k + 1 == per_segment) ? edges[s + 1] : lo + width;
      panels.push(evaluate_panel(f, lo, hi));
    }
  }

  auto totals = [&panels] {
    auto copy = panels;
    double value = 0.0;
    double error = 0.0;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
    return std::pair{value, error};
  };

  double error_sum = 0.0;
  {
    auto copy = panels;
    while (!copy.empty()) {
      error_sum += copy.top().error;
      copy.pop();
    }
  }

  while (error_sum > options.abs_tolerance) {
    if (static_cast<int>(panels.size()) >= options.max_panels) {
      const auto [value, error] = totals();
      throw NumericalError(fmt::format(
          "quadrature on [{}, {}] did not converge: estimate {} with error {} after {} panels "
          "(tolerance {})",
          a, b, value, error, panels.size(), options.abs_tolerance));
    }
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      const auto [value, error] = totals();
      throw NumericalError(fmt::format(
          "quadrature on [{}, {}] cannot refine below panel width at {}: estimate {} error {}", a,
          b, worst.a, value, error + worst.error));
    }
    const Panel left = evaluate_panel(f, worst.a, mid);
    const Panel right = evaluate_panel(f, mid, worst.b);
    error_sum += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
  }

  double value = 0.0;
  while (!panels.empty()) {
    value += panels.top().value;
    panels.pop();
  }
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  return value;
}

} // namespace fpfgain

#include "fpfgain/gain.hpp"

#include "fpfgain/errors.hpp"
#include "fpfgain/summation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fpfgain {

namespace {

void check_length(Index expected, Index actual, const char* what)
{
  if (expected != actual)
    throw InvalidInput(std::string(what) + ": expected length " + std::to_string(expected) +
                       ", got " + std::to_string(actual));
}

void check_solution(const DiffusionMapOperator& op, const PoissonSolution& solution,
                    const Eigen::Ref<const Eigen::VectorXd>& h_values)
{
  check_length(op.size(), solution.phi.size(), "solution");
  check_length(op.size(), h_values.size(), "h_values");
}

void check_point(const Eigen::Ref<const Eigen::VectorXd>& x, const Ensemble& ensemble)
{
  check_length(ensemble.dim(), x.size(), "evaluation point");
  if (!x.allFinite()) throw InvalidInput("evaluation point is not finite");
}

// Normalized weights p_j(x) = k(x, X^j) / n(x). The sqrt of sum_l g(x, X^l) cancels
// in the ratio, leaving p_j proportional to g(x, X^j) / sqrt(sum_l g_jl), which is
// normalized in log space so far-away points do not underflow.
Eigen::VectorXd point_weights(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const DiffusionMapOperator& op, const Ensemble& ensemble)
{
  check_length(op.size(), ensemble.size(), "ensemble");
  check_point(x, ensemble);
  const Index n = ensemble.size();
  const double scale = -1.0 / (4.0 * op.epsilon());
  Eigen::VectorXd logw(n);
  for (Index j = 0; j < n; ++j) {
    const double sq = (ensemble.particle(j).transpose() - x).squaredNorm();
    logw[j] = sq * scale - 0.5 * std::log(op.kernel_row_sums()[j]);
  }
  const double top = logw.maxCoeff();
  Eigen::VectorXd w = (logw.array() - top).exp();
  return w / compensated_sum(w);
}

Eigen::VectorXd smoothing_values(const PoissonSolution& solution,
                                 const Eigen::Ref<const Eigen::VectorXd>& h_values)
{
  return solution.phi + solution.epsilon * h_values;
}

} // namespace

PoissonSolution solve_fixed_point(const DiffusionMapOperator& op,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_values,
                                  const FixedPointOptions& options,
                                  const std::optional<Eigen::VectorXd>& phi_init)
{
  if (options.iterations < 1)
    throw InvalidParameter("iteration count L must be at least 1, got " +
                           std::to_string(options.iterations));
  check_length(op.size(), h_values.size(), "h_values");
  if (!h_values.allFinite()) throw InvalidInput("h_values contain non-finite entries");

  const double eps = op.epsilon();
  const Eigen::VectorXd forcing = eps * (h_values.array() - op.pi_mean(h_values)).matrix();
  const Eigen::MatrixXd& t = op.markov();

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(op.size());
  if (phi_init) {
    check_length(op.size(), phi_init->size(), "phi_init");
    if (!phi_init->allFinite()) throw InvalidInput("phi_init contains non-finite entries");
    phi = *phi_init;
    phi.array() -= op.pi_mean(phi);
  }

  Eigen::VectorXd next(op.size());
  int iterations = 0;
  while (iterations < options.iterations) {
    next.noalias() = t * phi;
    next += forcing;
    next.array() -= op.pi_mean(next);
    const double change = (next - phi).lpNorm<Eigen::Infinity>();
    phi.swap(next);
    ++iterations;
    if (options.tolerance > 0.0 && change < options.tolerance) break;
  }

  PoissonSolution solution;
  solution.epsilon = eps;
  solution.iterations_run = iterations;
  next.noalias() = t * phi;
  solution.residual = (phi - next - forcing).lpNorm<Eigen::Infinity>();
  solution.phi = std::move(phi);
  return solution;
}

std::string_view to_string(GainMethod method)
{
  switch (method) {
  case GainMethod::DiffusionMap: return "diffusion-map";
  case GainMethod::Constant: return "constant";
  case GainMethod::ExactOracle: return "exact-oracle";
  }
  return "unknown";
}

GainMethod gain_method_from_string(std::string_view name)
{
  if (name == "diffusion-map") return GainMethod::DiffusionMap;
  if (name == "constant") return GainMethod::Constant;
  if (name == "exact-oracle") return GainMethod::ExactOracle;
  throw InvalidParameter("unknown gain method '" + std::string(name) + "'");
}

Eigen::MatrixXd gain_coefficients(const DiffusionMapOperator& op,
                                  const PoissonSolution& solution,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_values)
{
  check_solution(op, solution, h_values);
  // s is unchanged by adding a constant to r; centering keeps r_j - (T r)_i well scaled.
  Eigen::VectorXd r = smoothing_values(solution, h_values);
  r.array() -= op.pi_mean(r);
  const Eigen::VectorXd tr = op.apply(r);
  const Eigen::MatrixXd& t = op.markov();
  const double scale = 1.0 / (2.0 * op.epsilon());

  const Index n = op.size();
  Eigen::MatrixXd s(n, n);
  for (Index j = 0; j < n; ++j)
    s.col(j) = scale * t.col(j).cwiseProduct((r[j] - tr.array()).matrix());
  return s;
}

GainField gain_at_particles(const DiffusionMapOperator& op, const PoissonSolution& solution,
                            const Eigen::Ref<const Eigen::VectorXd>& h_values,
                            const Ensemble& ensemble)
{
  check_length(op.size(), ensemble.size(), "ensemble");
  check_solution(op, solution, h_values);
  Eigen::VectorXd r = smoothing_values(solution, h_values);
  r.array() -= op.pi_mean(r);
  const Eigen::VectorXd tr = op.apply(r);
  const Eigen::MatrixXd& t = op.markov();
  const double scale = 1.0 / (2.0 * op.epsilon());
  // Rows of the coefficient matrix sum to zero, so positions may be centered first.
  // The coefficients are accumulated column by column rather than stored.
  const Eigen::RowVectorXd center = ensemble.positions().colwise().mean();
  const Eigen::MatrixXd centered = ensemble.positions().rowwise() - center;
  const Index n = op.size();
  GainField field;
  field.gains = Eigen::MatrixXd::Zero(n, ensemble.dim());
  Eigen::VectorXd coeff(n);
  for (Index j = 0; j < n; ++j) {
    coeff = scale * t.col(j).cwiseProduct((r[j] - tr.array()).matrix());
    for (Index m = 0; m < ensemble.dim(); ++m) field.gains.col(m) += centered(j, m) * coeff;
  }
  field.method = GainMethod::DiffusionMap;
  if (!field.gains.allFinite()) throw NumericalError("diffusion-map gain is not finite");
  return field;
}

double evaluate_phi_at(const Eigen::Ref<const Eigen::VectorXd>& x, const DiffusionMapOperator& op,
                       const PoissonSolution& solution, const ScalarField& h,
                       const Ensemble& ensemble)
{
  const Eigen::VectorXd h_values = evaluate_at_particles(h, ensemble);
  check_solution(op, solution, h_values);
  const Eigen::VectorXd p = point_weights(x, op, ensemble);
  const double hx = h(x);
  if (!std::isfinite(hx)) throw InvalidInput("h(x) is not finite");
  return compensated_dot(p, solution.phi) + solution.epsilon * (hx - op.pi_mean(h_values));
}

double gain_potential_at(const Eigen::Ref<const Eigen::VectorXd>& x, const DiffusionMapOperator& op,
                         const PoissonSolution& solution,
                         const Eigen::Ref<const Eigen::VectorXd>& h_values, const Ensemble& ensemble)
{
  check_solution(op, solution, h_values);
  const Eigen::VectorXd p = point_weights(x, op, ensemble);
  return compensated_dot(p, smoothing_values(solution, h_values));
}

Eigen::VectorXd gain_at_point(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const DiffusionMapOperator& op, const PoissonSolution& solution,
                              const Eigen::Ref<const Eigen::VectorXd>& h_values,
                              const Ensemble& ensemble)
{
  check_solution(op, solution, h_values);
  const Eigen::VectorXd p = point_weights(x, op, ensemble);
  Eigen::VectorXd r = smoothing_values(solution, h_values);
  r.array() -= op.pi_mean(r);
  const double f = compensated_dot(p, r);

  // d/dx of sum_j p_j(x) r_j with grad p_j = p_j ((X^j - x) - sum_l p_l (X^l - x)) / (2 eps).
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(ensemble.dim());
  for (Index j = 0; j < ensemble.size(); ++j)
    grad += (p[j] * (r[j] - f)) * (ensemble.particle(j).transpose() - x);
  return grad / (2.0 * op.epsilon());
}

Eigen::VectorXd constant_gain(const Ensemble& ensemble,
                              const Eigen::Ref<const Eigen::VectorXd>& h_values)
{
  check_length(ensemble.size(), h_values.size(), "h_values");
  const Index count = ensemble.size();
  const double n = static_cast<double>(count);
  const double mean = compensated_sum(h_values) / n;
  const Eigen::MatrixXd& x = ensemble.positions();
  Eigen::VectorXd gain(ensemble.dim());
  for (Index m = 0; m < ensemble.dim(); ++m) {
    double acc = 0.0;
    for (Index i = 0; i < count; ++i) acc += x(i, m) * (h_values[i] - mean);
    gain[m] = acc / n;
  }
  return gain;
}

double median_pairwise_distance(const Ensemble& ensemble)
{
  const Index n = ensemble.size();
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      dist.push_back((ensemble.particle(i) - ensemble.particle(j)).norm());

  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  const double upper = dist[mid];
  if (dist.size() % 2 == 1) return upper;
  const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double median_bandwidth(const Ensemble& ensemble)
{
  const double med = median_pairwise_distance(ensemble);
  if (!(med > 0.0))
    throw DegenerateEnsemble("median pairwise distance is zero; particles coincide");
  return 4.0 * med * med / std::log(static_cast<double>(ensemble.size()));
}

Eigen::VectorXd evaluate_at_particles(const ScalarField& h, const Ensemble& ensemble)
{
  Eigen::VectorXd values(ensemble.size());
  for (Index i = 0; i < ensemble.size(); ++i) {
    values[i] = h(ensemble.particle(i).transpose());
    if (!std::isfinite(values[i]))
      throw InvalidInput("h is not finite at particle " + std::to_string(i));
  }
  return values;
}

DiffusionMapGain diffusion_map_gain(const Ensemble& ensemble,
                                    const Eigen::Ref<const Eigen::VectorXd>& h_values,
                                    double epsilon, const FixedPointOptions& options,
                                    const std::optional<Eigen::VectorXd>& phi_init)
{
  const DiffusionMapOperator op = DiffusionMapOperator::build(ensemble, epsilon);
  DiffusionMapGain result;
  result.solution = solve_fixed_point(op, h_values, options, phi_init);
  result.field = gain_at_particles(op, result.solution, h_values, ensemble);
  return result;
}

} // namespace fpfgain

#include "fpfgain/diffusion_map.hpp"

#include "fpfgain/errors.hpp"
#include "fpfgain/summation.hpp"

#include <cmath>
#include <string>

namespace fpfgain {

namespace {

void check_epsilon(double epsilon)
{
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidParameter("epsilon must be positive and finite, got " + std::to_string(epsilon));
}

void check_length(Index expected, Index actual, const char* what)
{
  if (expected != actual)
    throw InvalidInput(std::string(what) + ": expected length " + std::to_string(expected) +
                       ", got " + std::to_string(actual));
}

} // namespace

Eigen::MatrixXd gaussian_kernel_matrix(const Ensemble& ensemble, double epsilon)
{
  check_epsilon(epsilon);
  const Index n = ensemble.size();
  const Index d = ensemble.dim();
  const Eigen::MatrixXd& x = ensemble.positions();
  const double scale = -1.0 / (4.0 * epsilon);

  // Full columns are filled so writes stay contiguous; (x_i - x_j)^2 is symmetric bit for bit.
  Eigen::MatrixXd g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      double sq = 0.0;
      for (Index m = 0; m < d; ++m) {
        const double diff = x(i, m) - x(j, m);
        sq += diff * diff;
      }
      double v = std::exp(sq * scale);
      if (v < kKernelFloor) v = 0.0;
      g(i, j) = v;
    }
    g(j, j) = 1.0;
  }
  return g;
}

DiffusionMapOperator DiffusionMapOperator::build(const Ensemble& ensemble, double epsilon)
{
  DiffusionMapOperator op;
  op.m_epsilon = epsilon;
  // g is overwritten in place by k and then by T. Both g and k are exactly
  // symmetric, so each row sum equals its column sum taken in the same order.
  Eigen::MatrixXd& m = op.m_markov;
  m = gaussian_kernel_matrix(ensemble, epsilon);
  const Index n = ensemble.size();

  op.m_kernel_row_sums.resize(n);
  for (Index j = 0; j < n; ++j) op.m_kernel_row_sums[j] = compensated_sum(m.col(j));
  for (Index i = 0; i < n; ++i)
    if (!(op.m_kernel_row_sums[i] > 0.0))
      throw DegenerateEnsemble("kernel row sum " + std::to_string(i) + " is zero");

  const Eigen::VectorXd inv_sqrt = op.m_kernel_row_sums.array().rsqrt();
  op.m_row_sums.resize(n);
  for (Index j = 0; j < n; ++j) {
    CompensatedSum acc;
    for (Index i = 0; i < n; ++i) {
      const double v = m(i, j) * (inv_sqrt[i] * inv_sqrt[j]);
      m(i, j) = v;
      acc.add(v);
    }
    op.m_row_sums[j] = acc.value();
  }

  const Eigen::VectorXd inv_row = op.m_row_sums.cwiseInverse();
  for (Index j = 0; j < n; ++j) m.col(j).array() *= inv_row.array();

  op.m_stationary = op.m_row_sums / compensated_sum(op.m_row_sums);
  return op;
}

Eigen::VectorXd DiffusionMapOperator::apply(const Eigen::Ref<const Eigen::VectorXd>& v) const
{
  check_length(size(), v.size(), "apply");
  return m_markov * v;
}

double DiffusionMapOperator::pi_mean(const Eigen::Ref<const Eigen::VectorXd>& v) const
{
  check_length(size(), v.size(), "pi_mean");
  return compensated_dot(m_stationary, v);
}

} // namespace fpfgain

#include "fpfgain/summation.hpp"

#include <vector>

namespace fpfgain {

double compensated_sum(std::span<const double> xs)
{
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& xs)
{
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < xs.size(); ++i) acc.add(xs[i]);
  return acc.value();
}

double compensated_dot(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b)
{
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
  return acc.value();
}

Eigen::VectorXd compensated_row_sums(const Eigen::Ref<const Eigen::MatrixXd>& m)
{
  // Column-major traversal with one accumulator per row; each row is still summed in column order.
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc[static_cast<std::size_t>(i)].add(m(i, j));
  Eigen::VectorXd sums(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) sums[i] = acc[static_cast<std::size_t>(i)].value();
  return sums;
}

} // namespace fpfgain

#pragma once

#include <Eigen/Core>
#include <span>

namespace fpfgain {

// Neumaier compensated summation.
class CompensatedSum
{
public:
  void add(double x)
  {
    const double t = m_sum + x;
    if (std::abs(m_sum) >= std::abs(x))
      m_comp += (m_sum - t) + x;
    else
      m_comp += (x - t) + m_sum;
    m_sum = t;
  }
  double value() const { return m_sum + m_comp; }

private:
  double m_sum = 0.0;
  double m_comp = 0.0;
};

double compensated_sum(std::span<const double> xs);
double compensated_sum(const Eigen::Ref<const Eigen::VectorXd>& xs);
double compensated_dot(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b);

/// Compensated sum of every row of a matrix.
Eigen::VectorXd compensated_row_sums(const Eigen::Ref<const Eigen::MatrixXd>& m);

} // namespace fpfgain

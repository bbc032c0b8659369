#pragma once

#include "fpfgain/ensemble.hpp"

#include <Eigen/Core>

namespace fpfgain {

/// Kernel entries below this value are flushed to zero; the diagonal is always 1.
inline constexpr double kKernelFloor = 1e-300;

/// g_ij = exp(-|X^i - X^j|^2 / (4 epsilon)), with the underflow floor applied.
Eigen::MatrixXd gaussian_kernel_matrix(const Ensemble& ensemble, double epsilon);

/// Empirical diffusion-map Markov operator built from an ensemble.
///
/// Holds the row-stochastic matrix T = diag(d)^-1 k built from the normalized
/// kernel k_ij = g_ij / sqrt(sum_l g_il sum_l g_jl), the row sums d of k and the
/// stationary vector pi = d / sum(d). g and k are not kept.
/// T is reversible with respect to pi. Instances are immutable once built and may
/// be shared between threads.
class DiffusionMapOperator
{
public:
  static DiffusionMapOperator build(const Ensemble& ensemble, double epsilon);

  double epsilon() const { return m_epsilon; }
  Index size() const { return m_markov.rows(); }

  /// Row sums of the raw Gaussian kernel, sum_l g_il.
  const Eigen::VectorXd& kernel_row_sums() const { return m_kernel_row_sums; }
  /// Row sums of the normalized kernel, d_i = sum_j k_ij.
  const Eigen::VectorXd& row_sums() const { return m_row_sums; }
  const Eigen::MatrixXd& markov() const { return m_markov; }
  const Eigen::VectorXd& stationary() const { return m_stationary; }

  /// T v.
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  /// sum_i pi_i v_i.
  double pi_mean(const Eigen::Ref<const Eigen::VectorXd>& v) const;

private:
  DiffusionMapOperator() = default;

  double m_epsilon = 0.0;
  Eigen::VectorXd m_kernel_row_sums;
  Eigen::VectorXd m_row_sums;
  Eigen::MatrixXd m_markov;
  Eigen::VectorXd m_stationary;
};

inline DiffusionMapOperator build_operator(const Ensemble& ensemble, double epsilon)
{
  return DiffusionMapOperator::build(ensemble, epsilon);
}

} // namespace fpfgain

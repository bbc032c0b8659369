#pragma once

#include <Eigen/Core>

namespace fpfgain {

using Index = Eigen::Index;

/// N particle positions in d dimensions, one particle per row.
///
/// Construction validates N >= 2 and that every coordinate is finite, so any
/// Ensemble that exists is usable by the kernel and gain routines.
class Ensemble
{
public:
  explicit Ensemble(Eigen::MatrixXd positions);

  /// One-dimensional convenience constructor.
  static Ensemble from_scalars(const Eigen::VectorXd& xs);

  Index size() const { return m_positions.rows(); }
  Index dim() const { return m_positions.cols(); }

  const Eigen::MatrixXd& positions() const { return m_positions; }
  auto particle(Index i) const { return m_positions.row(i); }

  /// True when every particle sits at the same location.
  bool all_identical() const;

private:
  Eigen::MatrixXd m_positions;
};

} // namespace fpfgain

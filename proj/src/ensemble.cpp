#include "fpfgain/ensemble.hpp"

#include "fpfgain/errors.hpp"

#include <string>
#include <utility>

namespace fpfgain {

Ensemble::Ensemble(Eigen::MatrixXd positions) : m_positions(std::move(positions))
{
  if (m_positions.rows() < 2)
    throw InvalidInput("ensemble needs at least 2 particles, got " +
                       std::to_string(m_positions.rows()));
  if (m_positions.cols() < 1)
    throw InvalidInput("ensemble dimension must be at least 1");
  if (!m_positions.allFinite())
    throw InvalidInput("ensemble contains non-finite coordinates");
}

Ensemble Ensemble::from_scalars(const Eigen::VectorXd& xs)
{
  Eigen::MatrixXd m = xs;
  return Ensemble(std::move(m));
}

bool Ensemble::all_identical() const
{
  for (Index i = 1; i < size(); ++i)
    if (m_positions.row(i) != m_positions.row(0)) return false;
  return true;
}

} // namespace fpfgain

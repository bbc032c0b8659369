#pragma once

#include "fpfgain/diffusion_map.hpp"
#include "fpfgain/ensemble.hpp"

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string_view>

namespace fpfgain {

/// Observation function h : R^d -> R.
using ScalarField = std::function<double(const Eigen::VectorXd&)>;

/// Iteration budget used for offline gain approximation studies.
inline constexpr int kSweepIterations = 1000;
/// Iteration budget used inside a filter step.
inline constexpr int kFilterIterations = 100;
/// Early exit once the fixed-point update changes Phi by less than this (inf-norm).
inline constexpr double kDefaultTolerance = 1e-10;

struct PoissonSolution
{
  Eigen::VectorXd phi;
  double epsilon = 0.0;
  int iterations_run = 0;
  /// || Phi - T Phi - epsilon (h - pi(h)) ||_inf for the returned Phi.
  double residual = 0.0;
};

struct FixedPointOptions
{
  int iterations = kSweepIterations;
  /// Set to 0 to always run the full iteration count.
  double tolerance = kDefaultTolerance;
};

/// Solves Phi = T Phi + epsilon (h - pi(h)) by fixed-point iteration.
///
/// Starts from phi_init (zero when absent) and re-centers Phi to zero pi-mean after
/// every sweep so round-off cannot drift along the constant eigenvector.
PoissonSolution solve_fixed_point(const DiffusionMapOperator& op,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_values,
                                  const FixedPointOptions& options = {},
                                  const std::optional<Eigen::VectorXd>& phi_init = std::nullopt);

enum class GainMethod
{
  DiffusionMap,
  Constant,
  ExactOracle,
};

std::string_view to_string(GainMethod method);
GainMethod gain_method_from_string(std::string_view name);

struct GainField
{
  Eigen::MatrixXd gains; // N x d, one gain vector per particle
  GainMethod method = GainMethod::DiffusionMap;
};

/// The N x N coefficient matrix s with K^i = sum_j s_ij X^j. Rows sum to zero.
Eigen::MatrixXd gain_coefficients(const DiffusionMapOperator& op,
                                  const PoissonSolution& solution,
                                  const Eigen::Ref<const Eigen::VectorXd>& h_values);

/// Gain vectors at the particle locations.
GainField gain_at_particles(const DiffusionMapOperator& op,
                            const PoissonSolution& solution,
                            const Eigen::Ref<const Eigen::VectorXd>& h_values,
                            const Ensemble& ensemble);

/// Extension of the Poisson solution off the particle set:
///   phi(x) = sum_j k(x, X^j) Phi_j / n(x) + epsilon (h(x) - pi(h)).
/// Reproduces Phi_i at x = X^i for a converged solution.
double evaluate_phi_at(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const DiffusionMapOperator& op,
                       const PoissonSolution& solution,
                       const ScalarField& h,
                       const Ensemble& ensemble);

/// The kernel-smoothed potential sum_j k(x, X^j) (Phi_j + epsilon h_j) / n(x).
/// Its gradient is the diffusion-map gain at x.
double gain_potential_at(const Eigen::Ref<const Eigen::VectorXd>& x,
                         const DiffusionMapOperator& op,
                         const PoissonSolution& solution,
                         const Eigen::Ref<const Eigen::VectorXd>& h_values,
                         const Ensemble& ensemble);

/// Analytic gradient of gain_potential_at. Equals row i of gain_at_particles at X^i.
Eigen::VectorXd gain_at_point(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const DiffusionMapOperator& op,
                              const PoissonSolution& solution,
                              const Eigen::Ref<const Eigen::VectorXd>& h_values,
                              const Ensemble& ensemble);

/// (1/N) sum_i (h(X^i) - mean(h)) X^i.
Eigen::VectorXd constant_gain(const Ensemble& ensemble,
                              const Eigen::Ref<const Eigen::VectorXd>& h_values);

/// Median of pairwise distances. For an even number of pairs this is the mean
/// of the two middle values.
double median_pairwise_distance(const Ensemble& ensemble);

/// Median heuristic: epsilon = 4 med^2 / log(N).
double median_bandwidth(const Ensemble& ensemble);

/// h evaluated at every particle.
Eigen::VectorXd evaluate_at_particles(const ScalarField& h, const Ensemble& ensemble);

/// Build the operator, solve the fixed point and return the gain in one call.
struct DiffusionMapGain
{
  GainField field;
  PoissonSolution solution;
};

DiffusionMapGain diffusion_map_gain(const Ensemble& ensemble,
                                    const Eigen::Ref<const Eigen::VectorXd>& h_values,
                                    double epsilon,
                                    const FixedPointOptions& options = {},
                                    const std::optional<Eigen::VectorXd>& phi_init = std::nullopt);

} // namespace fpfgain

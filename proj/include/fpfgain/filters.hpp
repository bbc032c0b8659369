#pragma once

#include "fpfgain/ensemble.hpp"
#include "fpfgain/errors.hpp"
#include "fpfgain/gain.hpp"
#include "fpfgain/oracles.hpp"
#include "fpfgain/random.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace fpfgain {

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using PriorSampler = std::function<Eigen::VectorXd(Stream&)>;

/// dX = a(X) dt + sigma_b dB,  dZ = h(X) dt + sigma_w dW.
struct ScenarioConfig
{
  Index dim = 1;
  VectorField drift;              // empty means a == 0
  ScalarField observation;
  double process_noise = 1.0;     // sigma_b; 0 gives the static problem dX = 0
  double sigma_w = 1.0;
  PriorSampler prior;
  std::optional<Density1D> prior_density;
  double dt = 0.01;
  int steps = 100;
  std::uint64_t seed = 0;
  /// Test hook: every Gaussian increment is replaced by 0.
  bool zero_noise = false;

  void validate() const;
  Eigen::VectorXd drift_at(const Eigen::VectorXd& x) const;
};

struct ObservationPath
{
  std::vector<double> times;      // left end point t_k of each increment
  std::vector<double> increments; // dZ_k
};

struct TruthPath
{
  Eigen::MatrixXd states;         // (steps + 1) x d, row k is X at t_k
  ObservationPath observations;
};

/// Euler-Maruyama simulation of the hidden state and its observation increments.
TruthPath simulate_truth(const ScenarioConfig& config);

/// Independent N(0, dt) increments for every particle of one filter.
///
/// Particle i owns stream derive_seed(seed, {particle, filter_tag, i}), so
/// changing N leaves the draws of the first particles untouched.
class ParticleNoise
{
public:
  ParticleNoise(std::uint64_t seed, std::uint64_t filter_tag, Index n, Index d, bool zero = false);

  /// N x d matrix of scale * sqrt(dt) * xi.
  Eigen::MatrixXd increments(double dt, double scale);

  Index size() const { return static_cast<Index>(m_streams.size()); }

private:
  std::vector<Stream> m_streams;
  Index m_dim;
  bool m_zero;
};

struct FpfGainOptions
{
  GainMethod method = GainMethod::DiffusionMap;
  /// Kernel bandwidth; the median heuristic is used when absent.
  std::optional<double> epsilon;
  /// Re-apply the median heuristic every step instead of once per run.
  bool reselect_epsilon = false;
  FixedPointOptions solver{kFilterIterations, kDefaultTolerance};
  /// Start the fixed point from the previous step's Phi. Off by default: when the
  /// ensemble splits into poorly connected groups the carried Phi grows without
  /// bound across steps and the explicit Euler update can diverge.
  bool warm_start = false;
};

/// State carried between FPF steps: the previous Phi and the bandwidth in use.
struct FpfState
{
  std::optional<Eigen::VectorXd> phi;
  std::optional<double> epsilon;
};

class FilterStepError : public Error
{
public:
  FilterStepError(int step, const std::string& what);
  int step() const { return m_step; }

private:
  int m_step;
};

/// Gain field for the current ensemble with the observation already divided by sigma_w.
Eigen::MatrixXd fpf_gain(const Ensemble& ensemble, const Eigen::VectorXd& h_scaled,
                         const FpfGainOptions& options, FpfState& state);

/// One explicit Euler step of the feedback particle filter:
///   X^i += a(X^i) dt + sigma_b dB^i + K^i (dZ~ - (h~(X^i) + mean h~) dt / 2)
/// with h~ = h / sigma_w and dZ~ = dZ / sigma_w. Gain and mean are taken on the
/// pre-update ensemble.
Ensemble fpf_step(const Ensemble& ensemble, double dz, const ScenarioConfig& config,
                  const FpfGainOptions& options, ParticleNoise& noise, FpfState& state);

/// Feedback particle filter with its noise streams and warm-start state.
class FeedbackParticleFilter
{
public:
  FeedbackParticleFilter(Ensemble initial, const ScenarioConfig& config, FpfGainOptions options,
                         std::uint64_t filter_tag);

  /// Advances one time step; solver failures are rethrown as FilterStepError.
  void step(double dz);

  const Ensemble& ensemble() const { return m_ensemble; }
  const FpfState& state() const { return m_state; }
  int steps_taken() const { return m_step; }

private:
  Ensemble m_ensemble;
  ScenarioConfig m_config;
  FpfGainOptions m_options;
  ParticleNoise m_noise;
  FpfState m_state;
  int m_step = 0;
};

enum class CovarianceNormalization
{
  Unbiased,   // 1 / (N - 1)
  Population, // 1 / N, matches the constant-gain formula exactly
};

/// Linear-Gaussian FPF (square-root EnKF) with K = Sigma H^T from the empirical covariance.
Ensemble linear_fpf_step(const Ensemble& ensemble, double dz, const Eigen::MatrixXd& a,
                         const Eigen::RowVectorXd& h, const ScenarioConfig& config,
                         ParticleNoise& noise,
                         CovarianceNormalization normalization = CovarianceNormalization::Unbiased);

struct WeightedEnsemble
{
  Eigen::MatrixXd positions;
  Eigen::VectorXd weights;

  static WeightedEnsemble uniform(const Ensemble& ensemble);
  void validate() const;
  Eigen::VectorXd mean() const;
  double expectation(const std::function<double(const Eigen::VectorXd&)>& f) const;
};

/// 1 / sum w_i^2 for normalized weights.
double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& weights);

/// Systematic resampling with a single uniform offset u in [0, 1).
std::vector<Index> systematic_resample(const Eigen::Ref<const Eigen::VectorXd>& weights, double u);

/// Resample when ESS / N falls below this fraction.
inline constexpr double kResampleThreshold = 0.5;

/// SIR step: propagate, reweight by the observation likelihood in log space,
/// normalize and resample systematically when ESS < N / 2.
WeightedEnsemble sir_step(const WeightedEnsemble& ensemble, double dz, const ScenarioConfig& config,
                          ParticleNoise& noise, Stream& resampler);

/// Initial ensemble drawn from the scenario prior on the prior stream of seed.
Ensemble sample_prior(const ScenarioConfig& config, Index n, std::uint64_t seed);

} // namespace fpfgain

#include "fpfgain/filters.hpp"

#include "fpfgain/summation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace fpfgain {

void ScenarioConfig::validate() const
{
  if (dim < 1) throw InvalidParameter("dim must be at least 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be positive");
  if (!(sigma_w > 0.0) || !std::isfinite(sigma_w)) throw InvalidParameter("sigma_w must be positive");
  if (steps < 1) throw InvalidParameter("steps must be at least 1");
  if (!(process_noise >= 0.0) || !std::isfinite(process_noise))
    throw InvalidParameter("process_noise must be non-negative");
  if (!observation) throw InvalidParameter("observation function is missing");
  if (!prior) throw InvalidParameter("prior sampler is missing");
}

Eigen::VectorXd ScenarioConfig::drift_at(const Eigen::VectorXd& x) const
{
  if (!drift) return Eigen::VectorXd::Zero(x.size());
  return drift(x);
}

TruthPath simulate_truth(const ScenarioConfig& config)
{
  config.validate();
  Stream prior_stream(derive_seed(config.seed, {stream_tag::truth, stream_tag::prior}));
  Stream state_stream(derive_seed(config.seed, {stream_tag::truth}));
  Stream obs_stream(derive_seed(config.seed, {stream_tag::truth, stream_tag::observation}));
  const double sqrt_dt = std::sqrt(config.dt);
  auto draw = [&](Stream& s) { return config.zero_noise ? 0.0 : s.normal(); };

  TruthPath path;
  path.states.resize(config.steps + 1, config.dim);
  path.observations.times.reserve(config.steps);
  path.observations.increments.reserve(config.steps);

  Eigen::VectorXd x = config.prior(prior_stream);
  if (x.size() != config.dim) throw InvalidInput("prior sample has the wrong dimension");
  path.states.row(0) = x.transpose();
  for (int k = 0; k < config.steps; ++k) {
    const double t = k * config.dt;
    const double dz = config.observation(x) * config.dt + config.sigma_w * sqrt_dt * draw(obs_stream);
    Eigen::VectorXd db(config.dim);
    for (Index m = 0; m < config.dim; ++m) db[m] = sqrt_dt * draw(state_stream);
    x += config.drift_at(x) * config.dt + config.process_noise * db;
    path.observations.times.push_back(t);
    path.observations.increments.push_back(dz);
    path.states.row(k + 1) = x.transpose();
  }
  return path;
}

// ---------------------------------------------------------------------------

ParticleNoise::ParticleNoise(std::uint64_t seed, std::uint64_t filter_tag, Index n, Index d, bool zero)
    : m_dim(d), m_zero(zero)
{
  m_streams.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    m_streams.emplace_back(derive_seed(
        seed, {stream_tag::particle, filter_tag, static_cast<std::uint64_t>(i)}));
}

Eigen::MatrixXd ParticleNoise::increments(double dt, double scale)
{
  const Index n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, m_dim);
  if (m_zero || scale == 0.0) return out;
  const double s = scale * std::sqrt(dt);
  for (Index i = 0; i < n; ++i)
    for (Index m = 0; m < m_dim; ++m) out(i, m) = s * m_streams[static_cast<std::size_t>(i)].normal();
  return out;
}

// ---------------------------------------------------------------------------

FilterStepError::FilterStepError(int step, const std::string& what)
    : Error("filter step " + std::to_string(step) + ": " + what), m_step(step)
{
}

Eigen::MatrixXd fpf_gain(const Ensemble& ensemble, const Eigen::VectorXd& h_scaled,
                         const FpfGainOptions& options, FpfState& state)
{
  const Index n = ensemble.size();
  const Index d = ensemble.dim();
  switch (options.method) {
  case GainMethod::Constant: {
    const Eigen::VectorXd k = constant_gain(ensemble, h_scaled);
    return k.transpose().replicate(n, 1);
  }
  case GainMethod::DiffusionMap: {
    double epsilon;
    if (options.epsilon) {
      epsilon = *options.epsilon;
    } else if (state.epsilon && !options.reselect_epsilon) {
      epsilon = *state.epsilon;
    } else {
      // Every particle at one point (a known initial condition): any kernel gain
      // sum_j s_ij X^j collapses to zero, so skip the solve and wait for spread.
      if (ensemble.all_identical()) return Eigen::MatrixXd::Zero(n, d);
      epsilon = median_bandwidth(ensemble);
    }
    state.epsilon = epsilon;

    std::optional<Eigen::VectorXd> init;
    if (options.warm_start && state.phi && state.phi->size() == n) init = state.phi;
    DiffusionMapGain result = diffusion_map_gain(ensemble, h_scaled, epsilon, options.solver, init);
    state.phi = std::move(result.solution.phi);
    return std::move(result.field.gains);
  }
  case GainMethod::ExactOracle:
    break;
  }
  throw InvalidParameter("the FPF supports diffusion-map and constant gains only");
}

Ensemble fpf_step(const Ensemble& ensemble, double dz, const ScenarioConfig& config,
                  const FpfGainOptions& options, ParticleNoise& noise, FpfState& state)
{
  const Index n = ensemble.size();
  if (noise.size() != n) throw InvalidInput("noise streams do not match the particle count");
  if (!std::isfinite(dz)) throw InvalidInput("observation increment is not finite");

  const double inv_sw = 1.0 / config.sigma_w;
  Eigen::VectorXd h_scaled = evaluate_at_particles(config.observation, ensemble) * inv_sw;
  const double h_mean = compensated_sum(h_scaled) / static_cast<double>(n);
  const Eigen::MatrixXd gains = fpf_gain(ensemble, h_scaled, options, state);
  const Eigen::MatrixXd db = noise.increments(config.dt, config.process_noise);
  const double dz_scaled = dz * inv_sw;

  Eigen::MatrixXd next = ensemble.positions();
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = ensemble.particle(i).transpose();
    const double innovation = dz_scaled - 0.5 * (h_scaled[i] + h_mean) * config.dt;
    next.row(i) += (config.drift_at(xi) * config.dt).transpose() + db.row(i) +
                   gains.row(i) * innovation;
  }
  return Ensemble(std::move(next));
}

FeedbackParticleFilter::FeedbackParticleFilter(Ensemble initial, const ScenarioConfig& config,
                                               FpfGainOptions options, std::uint64_t filter_tag)
    : m_ensemble(std::move(initial)),
      m_config(config),
      m_options(std::move(options)),
      m_noise(config.seed, filter_tag, m_ensemble.size(), m_ensemble.dim(), config.zero_noise)
{
}

void FeedbackParticleFilter::step(double dz)
{
  try {
    m_ensemble = fpf_step(m_ensemble, dz, m_config, m_options, m_noise, m_state);
  } catch (const Error& e) {
    throw FilterStepError(m_step, e.what());
  }
  ++m_step;
}

// ---------------------------------------------------------------------------

Ensemble linear_fpf_step(const Ensemble& ensemble, double dz, const Eigen::MatrixXd& a,
                         const Eigen::RowVectorXd& h, const ScenarioConfig& config,
                         ParticleNoise& noise, CovarianceNormalization normalization)
{
  const Index n = ensemble.size();
  const Index d = ensemble.dim();
  if (a.rows() != d || a.cols() != d) throw InvalidInput("A must be d x d");
  if (h.size() != d) throw InvalidInput("H must have d columns");
  if (noise.size() != n) throw InvalidInput("noise streams do not match the particle count");

  const Eigen::MatrixXd& x = ensemble.positions();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const double denom = normalization == CovarianceNormalization::Unbiased ? n - 1.0 : double(n);
  const Eigen::MatrixXd cov = centered.transpose() * centered / denom;

  const double inv_sw = 1.0 / config.sigma_w;
  const Eigen::RowVectorXd hs = h * inv_sw;
  const Eigen::VectorXd gain = cov * hs.transpose();
  const double h_mean = hs.dot(mean);
  const double dz_scaled = dz * inv_sw;
  const Eigen::MatrixXd db = noise.increments(config.dt, config.process_noise);

  Eigen::MatrixXd next = x;
  for (Index i = 0; i < n; ++i) {
    const double innovation = dz_scaled - 0.5 * (hs.dot(x.row(i)) + h_mean) * config.dt;
    next.row(i) += (x.row(i) * a.transpose()) * config.dt + db.row(i) + gain.transpose() * innovation;
  }
  return Ensemble(std::move(next));
}

// ---------------------------------------------------------------------------

WeightedEnsemble WeightedEnsemble::uniform(const Ensemble& ensemble)
{
  const Index n = ensemble.size();
  return {ensemble.positions(), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))};
}

void WeightedEnsemble::validate() const
{
  if (weights.size() != positions.rows()) throw InvalidInput("one weight per particle is required");
  if (positions.rows() < 1) throw InvalidInput("weighted ensemble is empty");
  if ((weights.array() < 0.0).any() || !weights.allFinite())
    throw InvalidInput("weights must be finite and non-negative");
  if (std::abs(compensated_sum(weights) - 1.0) > 1e-9) throw InvalidInput("weights must sum to 1");
}

Eigen::VectorXd WeightedEnsemble::mean() const
{
  return positions.transpose() * weights;
}

double WeightedEnsemble::expectation(const std::function<double(const Eigen::VectorXd&)>& f) const
{
  CompensatedSum acc;
  for (Index i = 0; i < positions.rows(); ++i)
    acc.add(weights[i] * f(positions.row(i).transpose()));
  return acc.value();
}

double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& weights)
{
  return 1.0 / weights.squaredNorm();
}

std::vector<Index> systematic_resample(const Eigen::Ref<const Eigen::VectorXd>& weights, double u)
{
  const Index n = weights.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  double cumulative = weights[0];
  Index j = 0;
  for (Index i = 0; i < n; ++i) {
    const double target = (static_cast<double>(i) + u) / static_cast<double>(n);
    while (target > cumulative && j + 1 < n) cumulative += weights[++j];
    idx[static_cast<std::size_t>(i)] = j;
  }
  return idx;
}

WeightedEnsemble sir_step(const WeightedEnsemble& ensemble, double dz, const ScenarioConfig& config,
                          ParticleNoise& noise, Stream& resampler)
{
  ensemble.validate();
  const Index n = ensemble.positions.rows();
  if (noise.size() != n) throw InvalidInput("noise streams do not match the particle count");

  WeightedEnsemble out;
  out.positions = ensemble.positions;
  const Eigen::MatrixXd db = noise.increments(config.dt, config.process_noise);
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = ensemble.positions.row(i).transpose();
    out.positions.row(i) += (config.drift_at(xi) * config.dt).transpose() + db.row(i);
  }

  // Likelihood of dZ given the propagated particle, accumulated in log space.
  const double inv_var = 1.0 / (config.sigma_w * config.sigma_w);
  Eigen::VectorXd logw(n);
  for (Index i = 0; i < n; ++i) {
    const double hi = config.observation(out.positions.row(i).transpose());
    logw[i] = std::log(ensemble.weights[i]) + (hi * dz - 0.5 * hi * hi * config.dt) * inv_var;
  }
  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("all SIR weights underflowed");
  out.weights = (logw.array() - top).exp();
  const double total = compensated_sum(out.weights);
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("all SIR weights underflowed");
  out.weights /= total;

  if (effective_sample_size(out.weights) < kResampleThreshold * static_cast<double>(n)) {
    const std::vector<Index> idx = systematic_resample(out.weights, resampler.uniform());
    Eigen::MatrixXd resampled(n, out.positions.cols());
    for (Index i = 0; i < n; ++i) resampled.row(i) = out.positions.row(idx[static_cast<std::size_t>(i)]);
    out.positions = std::move(resampled);
    out.weights.setConstant(1.0 / static_cast<double>(n));
  }
  return out;
}

Ensemble sample_prior(const ScenarioConfig& config, Index n, std::uint64_t seed)
{
  if (!config.prior) throw InvalidParameter("prior sampler is missing");
  Stream stream(derive_seed(seed, {stream_tag::prior}));
  Eigen::MatrixXd x(n, config.dim);
  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd s = config.prior(stream);
    if (s.size() != config.dim) throw InvalidInput("prior sample has the wrong dimension");
    x.row(i) = s.transpose();
  }
  return Ensemble(std::move(x));
}

} // namespace fpfgain

#include "fpfgain/oracles.hpp"

#include "fpfgain/errors.hpp"
#include "fpfgain/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>

namespace fpfgain {

namespace {

double normal_log_pdf(double x, double mean, double variance)
{
  const double z = x - mean;
  return -0.5 * (z * z / variance + std::log(2.0 * std::numbers::pi * variance));
}

double logistic_of_negative(double z)
{
  // 1 / (1 + e^z) without overflow.
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

} // namespace

// ---------------------------------------------------------------------------
// Density1D

Density1D::Density1D(std::vector<double> weights, std::vector<double> means,
                     std::vector<double> variances)
    : m_weights(std::move(weights)), m_means(std::move(means)), m_variances(std::move(variances))
{
  if (m_weights.empty() || m_weights.size() != m_means.size() ||
      m_weights.size() != m_variances.size())
    throw InvalidParameter("mixture weights, means and variances must have equal non-zero length");
  for (std::size_t k = 0; k < m_weights.size(); ++k) {
    if (!(m_weights[k] > 0.0)) throw InvalidParameter("mixture weights must be positive");
    if (!(m_variances[k] > 0.0)) throw InvalidParameter("mixture variances must be positive");
    if (!std::isfinite(m_means[k])) throw InvalidParameter("mixture means must be finite");
  }
  const double total = std::accumulate(m_weights.begin(), m_weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidParameter("mixture weights must sum to 1, got " + std::to_string(total));
}

Density1D Density1D::gaussian(double mean, double variance)
{
  return Density1D({1.0}, {mean}, {variance});
}

Density1D Density1D::mixture(std::vector<double> weights, std::vector<double> means,
                             std::vector<double> variances)
{
  return Density1D(std::move(weights), std::move(means), std::move(variances));
}

Density1D Density1D::bimodal(double variance)
{
  return Density1D({0.5, 0.5}, {-1.0, 1.0}, {variance, variance});
}

double Density1D::pdf(double x) const
{
  double p = 0.0;
  for (std::size_t k = 0; k < m_weights.size(); ++k)
    p += m_weights[k] * std::exp(normal_log_pdf(x, m_means[k], m_variances[k]));
  return p;
}

double Density1D::log_pdf(double x) const
{
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(m_weights.size());
  for (std::size_t k = 0; k < m_weights.size(); ++k) {
    terms[k] = std::log(m_weights[k]) + normal_log_pdf(x, m_means[k], m_variances[k]);
    top = std::max(top, terms[k]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

double Density1D::mean() const
{
  double m = 0.0;
  for (std::size_t k = 0; k < m_weights.size(); ++k) m += m_weights[k] * m_means[k];
  return m;
}

double Density1D::variance() const
{
  const double m = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < m_weights.size(); ++k) {
    const double dm = m_means[k] - m;
    v += m_weights[k] * (m_variances[k] + dm * dm);
  }
  return v;
}

double Density1D::sample(Stream& stream) const
{
  std::size_t k = 0;
  if (m_weights.size() > 1) {
    const double u = stream.uniform();
    double cumulative = 0.0;
    k = m_weights.size() - 1;
    for (std::size_t j = 0; j < m_weights.size(); ++j) {
      cumulative += m_weights[j];
      if (u < cumulative) {
        k = j;
        break;
      }
    }
  }
  return m_means[k] + std::sqrt(m_variances[k]) * stream.normal();
}

std::pair<double, double> Density1D::support() const
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < m_weights.size(); ++k) {
    const double s = std::sqrt(m_variances[k]);
    lo = std::min(lo, m_means[k] - 10.0 * s);
    hi = std::max(hi, m_means[k] + 10.0 * s);
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Exact scalar gain

ExactGain1D::ExactGain1D(Density1D rho, ScalarFunction h, double abs_tolerance)
    : m_rho(std::move(rho)), m_h(std::move(h)), m_tolerance(abs_tolerance)
{
  const auto [lo, hi] = m_rho.support();
  std::vector<double> breaks = m_rho.means();
  breaks.push_back(0.0);
  m_hhat = integrate([this](double z) { return m_rho.pdf(z) * m_h(z); }, lo, hi, breaks,
                     {.abs_tolerance = m_tolerance});
}

double ExactGain1D::operator()(double x) const
{
  if (!std::isfinite(x)) throw InvalidInput("exact gain evaluated at a non-finite point");
  const double rho_x = m_rho.pdf(x);
  if (!(rho_x > 0.0))
    throw NumericalError("density underflows at x = " + std::to_string(x) +
                         "; exact gain is not representable there");

  auto integrand = [this](double z) { return m_rho.pdf(z) * (m_h(z) - m_hhat); };
  const auto [lo, hi] = m_rho.support();
  std::vector<double> breaks = m_rho.means();
  breaks.push_back(0.0);
  const QuadratureOptions options{.abs_tolerance = m_tolerance * std::min(1.0, rho_x)};

  // int_{-inf}^x = -int_x^{inf} because the full integral vanishes.
  double tail;
  if (x <= m_rho.mean())
    tail = integrate(integrand, std::min(lo, x), x, breaks, options);
  else
    tail = -integrate(integrand, x, std::max(hi, x), breaks, options);
  return -tail / rho_x;
}

double exact_gain_1d(const Density1D& rho, const ScalarFunction& h, double x)
{
  return ExactGain1D(rho, h)(x);
}

// ---------------------------------------------------------------------------
// Hermite polynomials and the Gaussian diffusion map

double hermite(int n, double x)
{
  if (n < 0) throw InvalidParameter("Hermite order must be non-negative");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double curr = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * curr - k * prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

GaussianDmapParams gaussian_dmap_params(const Eigen::Ref<const Eigen::VectorXd>& sigma_sq,
                                        double epsilon)
{
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidParameter("epsilon must be positive and finite");
  if (sigma_sq.size() == 0) throw InvalidParameter("at least one variance is required");
  for (Index j = 0; j < sigma_sq.size(); ++j) {
    if (!(sigma_sq[j] > 0.0)) throw InvalidParameter("variances must be positive");
    if (j > 0 && sigma_sq[j] > sigma_sq[j - 1])
      throw InvalidParameter("variances must be sorted in descending order");
  }

  GaussianDmapParams out;
  out.delta.resize(sigma_sq.size());
  out.sigma_eps_sq.resize(sigma_sq.size());
  for (Index j = 0; j < sigma_sq.size(); ++j) {
    const double s2 = sigma_sq[j];
    const double delta = epsilon * (s2 + 4.0 * epsilon) / (s2 * s2 + 3.0 * s2 * epsilon + 4.0 * epsilon * epsilon);
    out.delta[j] = delta;
    out.sigma_eps_sq[j] = 2.0 * epsilon * (1.0 - delta) / (delta * (2.0 - delta));
  }
  out.op_norm = 1.0 - out.delta[0];
  return out;
}

Eigen::VectorXd gaussian_dmap_apply_linear(const Eigen::Ref<const Eigen::VectorXd>& sigma_sq,
                                           double epsilon,
                                           const Eigen::Ref<const Eigen::VectorXd>& x)
{
  if (x.size() != sigma_sq.size())
    throw InvalidInput("point dimension does not match the number of variances");
  const GaussianDmapParams p = gaussian_dmap_params(sigma_sq, epsilon);
  return (1.0 - p.delta.array()) * x.array();
}

// ---------------------------------------------------------------------------
// Static example posterior

StaticPosterior::StaticPosterior(Density1D prior, double sigma_w, double z_t, double t)
    : m_prior(std::move(prior)), m_sigma_w(sigma_w), m_z(z_t), m_t(t)
{
  if (!(sigma_w > 0.0)) throw InvalidParameter("sigma_w must be positive");
  if (!(t >= 0.0)) throw InvalidParameter("time must be non-negative");
  if (!std::isfinite(z_t)) throw InvalidParameter("Z_t must be finite");

  std::tie(m_lo, m_hi) = m_prior.support();
  constexpr int kGrid = 4000;
  m_log_peak = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kGrid; ++k) {
    const double x = m_lo + (m_hi - m_lo) * k / kGrid;
    m_log_peak = std::max(m_log_peak, log_unnormalized(x));
  }
  m_norm = integrate([this](double x) { return weight(x); }, m_lo, m_hi, breakpoints(),
                     quadrature_options());
  if (!(m_norm > 0.0)) throw NumericalError("static posterior normalization vanished");
}

double StaticPosterior::weight(double x) const
{
  return std::exp(log_unnormalized(x) - m_log_peak);
}

std::vector<double> StaticPosterior::breakpoints() const
{
  // Modes of p0(x) exp(...) sit near +-Z / (t + sigma_w^2) for the N(0,1) prior;
  // splitting there resolves narrow posteriors. 0 is the kink of |x|.
  const double mode = m_z > 0.0 ? m_z / (m_t + m_sigma_w * m_sigma_w) : 0.0;
  return {0.0, mode, -mode};
}

QuadratureOptions StaticPosterior::quadrature_options()
{
  return {.abs_tolerance = 1e-13, .max_panels = 1 << 14, .initial_panels = 32};
}

double StaticPosterior::log_unnormalized(double x) const
{
  const double h = std::abs(x);
  return m_prior.log_pdf(x) + (h * m_z - 0.5 * m_t * h * h) / (m_sigma_w * m_sigma_w);
}

double StaticPosterior::density(double x) const
{
  return weight(x) / m_norm;
}

double StaticPosterior::expectation(const ScalarFunction& psi) const
{
  const double num = integrate([&](double x) { return psi(x) * weight(x); }, m_lo, m_hi,
                               breakpoints(), quadrature_options());
  return num / m_norm;
}

double static_example_posterior(const Density1D& prior, double sigma_w, double z_t, double t,
                                double x)
{
  return StaticPosterior(prior, sigma_w, z_t, t).density(x);
}

// ---------------------------------------------------------------------------
// Benes filter

void BenesParams::validate() const
{
  if (!(sigma_b > 0.0)) throw InvalidParameter("benes.sigma_B must be positive");
  if (h1 == 0.0 || !std::isfinite(h1)) throw InvalidParameter("benes.h1 must be non-zero");
  if (!std::isfinite(mu) || !std::isfinite(h2) || !std::isfinite(x0))
    throw InvalidParameter("Benes parameters must be finite");
}

double BenesParams::drift(double x) const
{
  return mu * sigma_b * std::tanh(mu * x / sigma_b);
}

double BenesParams::observation(double x) const
{
  return h1 * x + h1 * h2;
}

double BenesPosterior::density(double x) const
{
  const double lo = std::exp(normal_log_pdf(x, a - b, sigma_sq));
  const double hi = std::exp(normal_log_pdf(x, a + b, sigma_sq));
  return w * lo + (1.0 - w) * hi;
}

BenesPosterior exact_benes_posterior(const BenesParams& params, double t, double psi_t)
{
  params.validate();
  if (!(t > 0.0)) throw InvalidParameter("Benes posterior requires t > 0");
  if (!std::isfinite(psi_t)) throw InvalidParameter("Psi_t must be finite");

  const double c = params.h1 * params.sigma_b * t;
  const double th = std::tanh(c);
  BenesPosterior post;
  post.a = params.sigma_b * psi_t * th + (params.h2 + params.x0) / std::cosh(c) - params.h2;
  post.b = params.mu / params.h1 * th;
  post.sigma_sq = params.sigma_b / params.h1 * th;
  // The posterior is proportional to cosh(mu x / sigma_b) N(x; a, sigma^2), so the
  // component at a - b carries weight 1 / (1 + exp(2 mu a / sigma_b)).
  post.w = logistic_of_negative(2.0 * params.mu * post.a / params.sigma_b);
  return post;
}

double benes_psi(const BenesParams& params, double t, const std::vector<TimedIncrement>& increments)
{
  if (increments.empty()) throw InvalidInput("benes_psi needs at least one increment");
  if (!(t > 0.0)) throw InvalidParameter("benes_psi requires t > 0");
  BenesPsiAccumulator acc(params);
  for (const auto& inc : increments) acc.add(inc.t, inc.dz);
  return acc.value(t);
}

BenesPsiAccumulator::BenesPsiAccumulator(const BenesParams& params)
    : m_rate(params.h1 * params.sigma_b)
{
  params.validate();
}

void BenesPsiAccumulator::add(double t_left, double dz)
{
  m_weighted_sum += std::sinh(m_rate * t_left) * dz;
}

double BenesPsiAccumulator::value(double t) const
{
  if (t <= 0.0) return 0.0;
  return m_weighted_sum / std::sinh(m_rate * t);
}

// ---------------------------------------------------------------------------
// Sampling

Ensemble sample_bimodal_vector(Index n, Index d, double sigma_sq, std::uint64_t seed)
{
  if (n < 2) throw InvalidParameter("sample_bimodal_vector needs n >= 2");
  if (d < 1) throw InvalidParameter("sample_bimodal_vector needs d >= 1");
  if (!(sigma_sq > 0.0)) throw InvalidParameter("sigma_sq must be positive");

  Stream stream(derive_seed(seed, {stream_tag::ensemble}));
  const double s = std::sqrt(sigma_sq);
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i) {
    const double mode = stream.uniform() < 0.5 ? -1.0 : 1.0;
    x(i, 0) = mode + s * stream.normal();
    for (Index m = 1; m < d; ++m) x(i, m) = s * stream.normal();
  }
  return Ensemble(std::move(x));
}

} // namespace fpfgain

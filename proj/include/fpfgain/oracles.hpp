#pragma once

#include "fpfgain/ensemble.hpp"
#include "fpfgain/quadrature.hpp"
#include "fpfgain/random.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace fpfgain {

/// One-dimensional Gaussian or Gaussian-mixture density.
class Density1D
{
public:
  static Density1D gaussian(double mean, double variance);
  static Density1D mixture(std::vector<double> weights, std::vector<double> means,
                           std::vector<double> variances);
  /// 1/2 N(-1, s2) + 1/2 N(+1, s2).
  static Density1D bimodal(double variance);

  bool is_gaussian() const { return m_weights.size() == 1; }

  double pdf(double x) const;
  double log_pdf(double x) const;
  double mean() const;
  double variance() const;
  double sample(Stream& stream) const;

  /// [min_k(m_k - 10 s_k), max_k(m_k + 10 s_k)]; mass outside is negligible.
  std::pair<double, double> support() const;

  const std::vector<double>& weights() const { return m_weights; }
  const std::vector<double>& means() const { return m_means; }
  const std::vector<double>& variances() const { return m_variances; }

private:
  Density1D(std::vector<double> weights, std::vector<double> means, std::vector<double> variances);

  std::vector<double> m_weights;
  std::vector<double> m_means;
  std::vector<double> m_variances;
};

using ScalarFunction = std::function<double(double)>;

/// Exact scalar gain K(x) = -(1/rho(x)) int_{-inf}^x rho(z)(h(z) - hhat) dz.
///
/// hhat is computed once at construction. The integral is taken over whichever
/// tail is shorter (the full integral vanishes), which keeps relative accuracy
/// where rho(x) is small.
class ExactGain1D
{
public:
  ExactGain1D(Density1D rho, ScalarFunction h, double abs_tolerance = 1e-10);

  double operator()(double x) const;
  double hhat() const { return m_hhat; }

private:
  Density1D m_rho;
  ScalarFunction m_h;
  double m_tolerance;
  double m_hhat = 0.0;
};

double exact_gain_1d(const Density1D& rho, const ScalarFunction& h, double x);

/// Probabilists' Hermite polynomial He_n(x).
double hermite(int n, double x);

struct GaussianDmapParams
{
  Eigen::VectorXd delta;
  Eigen::VectorXd sigma_eps_sq;
  double op_norm = 0.0;
};

/// Closed-form diffusion-map quantities for rho = N(0, diag(sigma_sq)).
/// sigma_sq must be positive and sorted in descending order.
GaussianDmapParams gaussian_dmap_params(const Eigen::Ref<const Eigen::VectorXd>& sigma_sq,
                                        double epsilon);

/// Action of the Gaussian diffusion map on linear functions: x_j -> (1 - delta_j) x_j.
Eigen::VectorXd gaussian_dmap_apply_linear(const Eigen::Ref<const Eigen::VectorXd>& sigma_sq,
                                           double epsilon,
                                           const Eigen::Ref<const Eigen::VectorXd>& x);

/// Posterior of the static problem dX = 0, dZ = |X| dt + sigma_w dW:
///   p(x) ~ p0(x) exp((|x| Z_t - t |x|^2 / 2) / sigma_w^2).
class StaticPosterior
{
public:
  StaticPosterior(Density1D prior, double sigma_w, double z_t, double t);

  double density(double x) const;
  /// int psi(x) p(x) dx. psi may have a discontinuity at 0.
  double expectation(const ScalarFunction& psi) const;

private:
  double log_unnormalized(double x) const;
  double weight(double x) const;
  std::vector<double> breakpoints() const;
  static QuadratureOptions quadrature_options();

  Density1D m_prior;
  double m_sigma_w;
  double m_z;
  double m_t;
  double m_lo = 0.0;
  double m_hi = 0.0;
  double m_log_peak = 0.0;
  double m_norm = 1.0;
};

double static_example_posterior(const Density1D& prior, double sigma_w, double z_t, double t,
                                double x);

struct BenesParams
{
  double mu = 0.5;
  double sigma_b = 0.8;
  double h1 = 0.4;
  double h2 = 0.0;
  double x0 = 1.0;

  void validate() const;
  double drift(double x) const;
  double observation(double x) const;
};

struct BenesPosterior
{
  double a = 0.0;
  double b = 0.0;
  double sigma_sq = 0.0;
  double w = 0.5;

  /// w (a - b) + (1 - w)(a + b).
  double mean() const { return a + b * (1.0 - 2.0 * w); }
  double density(double x) const;
};

/// Mixture w N(a - b, sigma^2) + (1 - w) N(a + b, sigma^2) with c = h1 sigma_b t:
///   a = sigma_b psi_t tanh(c) + (h2 + x0) / cosh(c) - h2,  b = (mu / h1) tanh(c),
///   sigma^2 = (sigma_b / h1) tanh(c),  w = 1 / (1 + exp(2 mu a / sigma_b)).
BenesPosterior exact_benes_posterior(const BenesParams& params, double t, double psi_t);

struct TimedIncrement
{
  double t;  // left end point of the increment
  double dz;
};

/// Left-point sum sum_k sinh(c t_k) / sinh(c t) dZ_k with c = h1 sigma_b.
double benes_psi(const BenesParams& params, double t, const std::vector<TimedIncrement>& increments);

/// Running version of benes_psi for use inside a time-stepping loop.
class BenesPsiAccumulator
{
public:
  explicit BenesPsiAccumulator(const BenesParams& params);
  void add(double t_left, double dz);
  double value(double t) const;

private:
  double m_rate;
  double m_weighted_sum = 0.0;
};

/// n i.i.d. samples with x_1 ~ 1/2 N(-1, s2) + 1/2 N(1, s2) and x_2..x_d ~ N(0, s2).
Ensemble sample_bimodal_vector(Index n, Index d, double sigma_sq, std::uint64_t seed);

} // namespace fpfgain

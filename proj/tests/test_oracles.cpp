#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpfgain/errors.hpp"
#include "fpfgain/oracles.hpp"
#include "fpfgain/quadrature.hpp"

#include <cmath>
#include <numbers>

using namespace fpfgain;

namespace {

double normal_pdf(double x, double m, double v)
{
  return std::exp(-(x - m) * (x - m) / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
}

} // namespace

TEST_CASE("quadrature integrates smooth and kinked integrands")
{
  CHECK(integrate([](double x) { return std::exp(-x * x); }, -10.0, 10.0) ==
        doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
  CHECK(integrate([](double x) { return std::abs(x); }, -1.0, 2.0, std::vector<double>{0.0}) ==
        doctest::Approx(2.5).epsilon(1e-13));
  CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-13));
  CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
  QuadratureOptions tight{1e-14, 4, 1};
  CHECK_THROWS_AS(integrate([](double x) { return std::sqrt(std::abs(x)); }, -1.0, 1.0, tight),
                  NumericalError);
}

TEST_CASE("densities")
{
  const Density1D g = Density1D::gaussian(1.0, 4.0);
  CHECK(g.pdf(0.3) == doctest::Approx(normal_pdf(0.3, 1.0, 4.0)).epsilon(1e-14));
  CHECK(g.log_pdf(0.3) == doctest::Approx(std::log(normal_pdf(0.3, 1.0, 4.0))).epsilon(1e-14));
  const Density1D b = Density1D::bimodal(0.2);
  CHECK(b.mean() == doctest::Approx(0.0));
  CHECK(b.variance() == doctest::Approx(1.2));
  CHECK(b.pdf(0.4) ==
        doctest::Approx(0.5 * normal_pdf(0.4, -1.0, 0.2) + 0.5 * normal_pdf(0.4, 1.0, 0.2)).epsilon(1e-14));
  const auto [lo, hi] = b.support();
  CHECK(integrate([&](double x) { return b.pdf(x); }, lo, hi, std::vector<double>{-1.0, 0.0, 1.0}) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(Density1D::gaussian(0.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(Density1D::mixture({0.5, 0.6}, {0.0, 1.0}, {1.0, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(Density1D::mixture({0.5}, {0.0, 1.0}, {1.0, 1.0}), InvalidParameter);
}

TEST_CASE("exact gain for Gaussian densities and linear observations")
{
  const ExactGain1D unit(Density1D::gaussian(0.0, 1.0), [](double x) { return x; });
  const ExactGain1D shifted(Density1D::gaussian(2.0, 0.5), [](double x) { return 3.0 * x - 1.0; });
  for (int k = 0; k < 20; ++k) {
    const double x = -4.0 + 8.0 * k / 19.0;
    CHECK(std::abs(unit(x) - 1.0) < 1e-8);
    CHECK(std::abs(shifted(x + 2.0) - 1.5) < 1e-8);
  }
  CHECK(unit.hhat() == doctest::Approx(0.0));
  CHECK(shifted.hhat() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("exact bimodal gain shape")
{
  const ExactGain1D k(Density1D::bimodal(0.2), [](double x) { return x; });
  CHECK(k(0.0) > 5.0 * k(1.0));
  CHECK(k(0.0) > 5.0 * k(-1.0));
  CHECK(k(0.7) == doctest::Approx(k(-0.7)).epsilon(1e-8));
  CHECK(k(0.0) > 1.0);
  // Closed form: K(x) = (1/rho(x)) sum_c w_c (m_c Q((x - m_c)/s_c) + s_c^2 N(x; m_c, s_c^2)).
  auto closed = [](double x) {
    double tail = 0.0, rho = 0.0;
    for (double m : {-1.0, 1.0}) {
      const double q = 0.5 * std::erfc((x - m) / std::sqrt(2.0 * 0.2));
      tail += 0.5 * (m * q + 0.2 * normal_pdf(x, m, 0.2));
      rho += 0.5 * normal_pdf(x, m, 0.2);
    }
    return tail / rho;
  };
  for (double x : {-2.5, -1.0, -0.3, 0.0, 0.4, 1.5, 2.8})
    CHECK(k(x) == doctest::Approx(closed(x)).epsilon(1e-8));
}

TEST_CASE("hermite polynomials")
{
  CHECK(hermite(0, 3.7) == 1.0);
  CHECK(hermite(1, 3.7) == 3.7);
  CHECK(hermite(2, 1.5) == doctest::Approx(1.25));
  CHECK(hermite(3, 2.0) == doctest::Approx(2.0));
  CHECK(hermite(4, 1.0) == doctest::Approx(1.0 - 6.0 + 3.0));
  CHECK_THROWS_AS(hermite(-1, 0.0), InvalidParameter);
  // Orthogonality under N(0,1): E[He_m He_n] = n! delta_mn.
  auto inner = [](int m, int n) {
    return integrate([=](double x) { return hermite(m, x) * hermite(n, x) * normal_pdf(x, 0.0, 1.0); },
                     -12.0, 12.0);
  };
  CHECK(std::abs(inner(2, 3)) < 1e-10);
  CHECK(inner(3, 3) == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(inner(4, 4) == doctest::Approx(24.0).epsilon(1e-10));
}

TEST_CASE("Gaussian diffusion map parameters")
{
  const GaussianDmapParams p = gaussian_dmap_params(Eigen::VectorXd::Constant(1, 1.0), 1.0);
  CHECK(p.delta[0] == doctest::Approx(0.625));
  CHECK(p.op_norm == doctest::Approx(0.375));
  CHECK(gaussian_dmap_apply_linear(Eigen::VectorXd::Constant(1, 1.0), 1.0,
                                   Eigen::VectorXd::Constant(1, 1.0))[0] == doctest::Approx(0.375));
  CHECK(gaussian_dmap_apply_linear(Eigen::VectorXd::Constant(1, 1.0), 1.0,
                                   Eigen::VectorXd::Zero(1))[0] == 0.0);

  const auto small = gaussian_dmap_params(Eigen::VectorXd::Constant(1, 1.0), 1e-6);
  CHECK(small.delta[0] == doctest::Approx(1e-6).epsilon(0.01));
  const auto tiny = gaussian_dmap_params(Eigen::VectorXd::Constant(1, 1.0), 1e-4);
  CHECK(std::abs(tiny.sigma_eps_sq[0] - 1.0) < 1e-3);

  Eigen::Vector3d s(3.0, 1.0, 0.2);
  double previous = 0.0;
  for (double eps : {0.01, 0.1, 0.5, 2.0, 10.0}) {
    const auto q = gaussian_dmap_params(s, eps);
    CHECK(q.delta.minCoeff() > 0.0);
    CHECK(q.delta.maxCoeff() < 1.0);
    CHECK(q.delta[0] > previous);
    previous = q.delta[0];
    CHECK(q.op_norm == doctest::Approx(1.0 - q.delta[0]));
  }
  CHECK_THROWS_AS(gaussian_dmap_params(Eigen::Vector2d(1.0, 2.0), 1.0), InvalidParameter);
  CHECK_THROWS_AS(gaussian_dmap_params(Eigen::Vector2d(1.0, 0.0), 1.0), InvalidParameter);
  CHECK_THROWS_AS(gaussian_dmap_params(Eigen::Vector2d(2.0, 1.0), 0.0), InvalidParameter);
}

TEST_CASE("static posterior")
{
  const Density1D prior = Density1D::gaussian(0.0, 1.0);
  const StaticPosterior at_zero(prior, 0.1, 0.0, 0.0);
  for (double x : {-3.0, -1.0, 0.0, 0.5, 2.5}) CHECK(std::abs(at_zero.density(x) - prior.pdf(x)) < 1e-12);

  const StaticPosterior p(prior, 0.1, 0.04, 0.05);
  for (double x : {0.1, 0.4, 0.9, 1.7}) CHECK(p.density(x) == doctest::Approx(p.density(-x)).epsilon(1e-12));
  CHECK(p.expectation([](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p.expectation([](double x) { return x; })) < 1e-12);

  // Direct quadrature of the unnormalized density as an independent check.
  auto unnormalized = [](double x) {
    return normal_pdf(x, 0.0, 1.0) * std::exp((std::abs(x) * 0.04 - 0.05 * x * x / 2.0) / 0.01);
  };
  const double mass = integrate(unnormalized, -12.0, 12.0, std::vector<double>{0.0});
  const double neg = integrate([&](double x) { return x * unnormalized(x); }, -12.0, 0.0) / mass;
  CHECK(p.expectation([](double x) { return x <= 0.0 ? x : 0.0; }) == doctest::Approx(neg).epsilon(1e-9));
  CHECK(static_example_posterior(prior, 0.1, 0.04, 0.05, 0.8) ==
        doctest::Approx(unnormalized(0.8) / mass).epsilon(1e-9));

  // Sharp posterior concentrated near +-Z/t.
  const StaticPosterior sharp(prior, 0.1, 0.5, 0.5);
  CHECK(sharp.expectation([](double x) { return std::abs(x); }) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Benes posterior")
{
  BenesParams params;
  params.x0 = 0.0;
  const BenesPosterior early = exact_benes_posterior(params, 1e-9, 0.0);
  CHECK(std::abs(early.a) < 1e-12);
  CHECK(std::abs(early.b) < 1e-8);
  CHECK(early.sigma_sq < 1e-8);
  CHECK(early.w == doctest::Approx(0.5));

  BenesParams shifted;
  const BenesPosterior start = exact_benes_posterior(shifted, 1e-9, 0.0);
  CHECK(start.a == doctest::Approx(1.0));
  CHECK(start.mean() == doctest::Approx(1.0).epsilon(1e-6));

  const BenesPosterior late = exact_benes_posterior(shifted, 200.0, 0.7);
  CHECK(late.b == doctest::Approx(1.25));
  CHECK(late.sigma_sq == doctest::Approx(2.0));

  for (double t : {0.01, 0.5, 3.0, 50.0})
    for (double psi : {-30.0, -1.0, 0.0, 2.0, 40.0}) {
      const BenesPosterior q = exact_benes_posterior(shifted, t, psi);
      CHECK(q.w >= 0.0);
      CHECK(q.w <= 1.0);
      CHECK(std::isfinite(q.mean()));
      CHECK(q.sigma_sq >= 0.0);
    }

  const BenesPosterior mid = exact_benes_posterior(shifted, 2.0, 0.3);
  const double lo = mid.a - mid.b - 12.0 * std::sqrt(mid.sigma_sq);
  const double hi = mid.a + mid.b + 12.0 * std::sqrt(mid.sigma_sq);
  CHECK(integrate([&](double x) { return mid.density(x); }, lo, hi) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(integrate([&](double x) { return x * mid.density(x); }, lo, hi) ==
        doctest::Approx(mid.mean()).epsilon(1e-10));
  CHECK_THROWS_AS(exact_benes_posterior(shifted, 0.0, 0.0), InvalidParameter);

  // The density must be proportional to cosh(mu x / sigma_b) N(x; a, sigma^2).
  for (double psi : {-2.0, 0.1, 1.5}) {
    const BenesPosterior q = exact_benes_posterior(shifted, 1.3, psi);
    auto shape = [&](double x) {
      return std::cosh(shifted.mu * x / shifted.sigma_b) * normal_pdf(x, q.a, q.sigma_sq);
    };
    const double ratio = q.density(0.0) / shape(0.0);
    for (double x : {-3.0, -1.0, 0.5, 2.0, 4.0})
      CHECK(q.density(x) / shape(x) == doctest::Approx(ratio).epsilon(1e-10));
  }
  // Start weight for x0 != 0.
  CHECK(start.w == doctest::Approx(1.0 / (1.0 + std::exp(2.0 * shifted.mu * shifted.x0 / shifted.sigma_b))).epsilon(1e-6));
}

TEST_CASE("Benes Psi sums")
{
  const BenesParams params;
  CHECK(benes_psi(params, 1.0, {{0.0, 0.0}, {0.5, 0.0}}) == 0.0);
  CHECK(benes_psi(params, 1.0, {{0.0, 3.0}}) == 0.0);
  CHECK_THROWS_AS(benes_psi(params, 1.0, {}), InvalidInput);

  const double c = params.h1 * params.sigma_b;
  const double t = 2.0, dt = 1e-4, slope = 0.8;
  std::vector<TimedIncrement> inc;
  BenesPsiAccumulator acc(params);
  const int steps = static_cast<int>(std::lround(t / dt));
  for (int k = 0; k < steps; ++k) {
    inc.push_back({k * dt, slope * dt});
    acc.add(k * dt, slope * dt);
  }
  const double closed = slope * (std::cosh(c * t) - 1.0) / (c * std::sinh(c * t));
  CHECK(std::abs(benes_psi(params, t, inc) - closed) < 1e-3);
  CHECK(acc.value(t) == doctest::Approx(benes_psi(params, t, inc)).epsilon(1e-12));
  CHECK(acc.value(0.0) == 0.0);
}

TEST_CASE("bimodal vector samples")
{
  const Ensemble e = sample_bimodal_vector(40000, 3, 0.2, 99);
  const Eigen::VectorXd x1 = e.positions().col(0);
  CHECK(std::abs(x1.mean()) < 0.03);
  CHECK((x1.array() - x1.mean()).square().mean() == doctest::Approx(1.2).epsilon(0.03));
  const Eigen::VectorXd x2 = e.positions().col(2);
  CHECK((x2.array() - x2.mean()).square().mean() == doctest::Approx(0.2).epsilon(0.03));
  const Ensemble again = sample_bimodal_vector(40000, 3, 0.2, 99);
  CHECK(e.positions() == again.positions());
  CHECK(sample_bimodal_vector(10, 1, 0.2, 1).dim() == 1);
}

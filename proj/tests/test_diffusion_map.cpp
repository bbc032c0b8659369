#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpfgain/diffusion_map.hpp"
#include "fpfgain/errors.hpp"
#include "fpfgain/gain.hpp"
#include "fpfgain/random.hpp"

#include <cmath>
#include <vector>

using namespace fpfgain;

namespace {

Ensemble random_ensemble(Index n, Index d, std::uint64_t seed)
{
  Stream s(seed);
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = s.normal();
  return Ensemble(x);
}

// Direct loop evaluation of the normalized Markov matrix.
std::vector<std::vector<double>> reference_markov(const Ensemble& e, double eps)
{
  const auto n = static_cast<std::size_t>(e.size());
  std::vector<std::vector<double>> g(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double r2 = 0.0;
      for (Index k = 0; k < e.dim(); ++k) {
        const double diff = e.positions()(Index(i), k) - e.positions()(Index(j), k);
        r2 += diff * diff;
      }
      g[i][j] = std::exp(-r2 / (4.0 * eps));
    }
  std::vector<double> gs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gs[i] += g[i][j];
  std::vector<std::vector<double>> t(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      t[i][j] = g[i][j] / std::sqrt(gs[i] * gs[j]);
      row += t[i][j];
    }
    for (std::size_t j = 0; j < n; ++j) t[i][j] /= row;
  }
  return t;
}

} // namespace

TEST_CASE("two particles at distance one")
{
  const Ensemble e = Ensemble::from_scalars(Eigen::Vector2d(0.0, 1.0));
  const auto op = DiffusionMapOperator::build(e, 0.25);
  const double a = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(op.markov()(0, 0) == doctest::Approx(a).epsilon(1e-14));
  CHECK(op.markov()(0, 1) == doctest::Approx(1.0 - a).epsilon(1e-14));
  CHECK(op.markov()(1, 0) == doctest::Approx(1.0 - a).epsilon(1e-14));
  CHECK(op.markov()(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(op.stationary()[0] == doctest::Approx(0.5));
  CHECK(op.stationary()[1] == doctest::Approx(0.5));

  const Eigen::VectorXd tv = op.apply(Eigen::Vector2d(0.0, 1.0));
  CHECK(tv[0] == doctest::Approx(0.2689).epsilon(1e-4));
  CHECK(tv[1] == doctest::Approx(0.7311).epsilon(1e-4));
  const Eigen::VectorXd te = op.apply(Eigen::Vector2d(1.0, 0.0));
  CHECK(te[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(te[1] == doctest::Approx(0.2689).epsilon(1e-4));
}

TEST_CASE("kernel matrix is symmetric with unit diagonal")
{
  const Ensemble e = random_ensemble(30, 3, 11);
  const Eigen::MatrixXd g = gaussian_kernel_matrix(e, 0.7);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < 30; ++i) CHECK(g(i, i) == 1.0);
  CHECK(g.minCoeff() > 0.0);
}

TEST_CASE("markov matrix agrees with a direct loop evaluation")
{
  const Ensemble e = random_ensemble(25, 2, 5);
  const double eps = 0.3;
  const auto op = DiffusionMapOperator::build(e, eps);
  const auto ref = reference_markov(e, eps);
  double worst = 0.0;
  for (Index i = 0; i < 25; ++i)
    for (Index j = 0; j < 25; ++j)
      worst = std::max(worst, std::abs(op.markov()(i, j) - ref[std::size_t(i)][std::size_t(j)]));
  CHECK(worst < 1e-14);
}

TEST_CASE("row sums, stationarity and detailed balance")
{
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Stream s(seed * 97);
    const Index n = 2 + Index(s() % 150);
    const Index d = 1 + Index(s() % 6);
    const Ensemble e = random_ensemble(n, d, seed);
    const auto op = DiffusionMapOperator::build(e, median_bandwidth(e));
    const Eigen::MatrixXd& t = op.markov();
    const Eigen::VectorXd& pi = op.stationary();
    CHECK((t.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK(std::abs(pi.sum() - 1.0) < 1e-12);
    CHECK((pi.transpose() * t - pi.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::MatrixXd flow = pi.asDiagonal() * t;
    CHECK((flow - flow.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.minCoeff() >= 0.0);
  }
}

TEST_CASE("operator is invariant under particle relabeling")
{
  const Ensemble e = random_ensemble(12, 2, 3);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
  perm.setIdentity();
  std::reverse(perm.indices().data(), perm.indices().data() + 12);
  const Ensemble p(perm * e.positions());
  const auto a = DiffusionMapOperator::build(e, 0.5);
  const auto b = DiffusionMapOperator::build(p, 0.5);
  const Eigen::MatrixXd permuted = perm * a.markov() * perm.transpose();
  CHECK((permuted - b.markov()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("pi_mean of a constant is the constant")
{
  const auto op = DiffusionMapOperator::build(random_ensemble(40, 2, 8), 0.4);
  CHECK(op.pi_mean(Eigen::VectorXd::Constant(40, 3.5)) == doctest::Approx(3.5).epsilon(1e-14));
  CHECK((op.apply(Eigen::VectorXd::Constant(40, -2.0)).array() + 2.0).abs().maxCoeff() < 1e-13);
}

TEST_CASE("large bandwidth makes T nearly uniform")
{
  const auto op = DiffusionMapOperator::build(random_ensemble(10, 1, 4), 1e8);
  CHECK((op.markov().array() - 0.1).abs().maxCoeff() < 1e-7);
}

TEST_CASE("invalid inputs")
{
  const Ensemble e = random_ensemble(5, 1, 1);
  CHECK_THROWS_AS(DiffusionMapOperator::build(e, 0.0), InvalidParameter);
  CHECK_THROWS_AS(DiffusionMapOperator::build(e, -1.0), InvalidParameter);
  CHECK_THROWS_AS(DiffusionMapOperator::build(e, std::nan("")), InvalidParameter);
  const auto op = DiffusionMapOperator::build(e, 1.0);
  CHECK_THROWS_AS(op.apply(Eigen::VectorXd::Zero(4)), InvalidInput);
  CHECK_THROWS_AS(op.pi_mean(Eigen::VectorXd::Zero(6)), InvalidInput);
  CHECK_THROWS_AS(Ensemble{Eigen::MatrixXd::Zero(1, 1)}, InvalidInput);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 1);
  bad(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Ensemble{bad}, InvalidInput);
}

TEST_CASE("far-apart particles keep positive kernel rows")
{
  // Kernel values underflow; the floor keeps every row sum positive.
  const Ensemble e = Ensemble::from_scalars(Eigen::Vector3d(0.0, 1e3, 2e3));
  const auto op = DiffusionMapOperator::build(e, 0.01);
  CHECK((op.markov().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(op.markov()(0, 0) == doctest::Approx(1.0));
}

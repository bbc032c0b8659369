#include "fpfgain/experiments.hpp"

#include "fpfgain/parallel.hpp"
#include "fpfgain/summation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace fpfgain {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t filter_tag(FilterKind kind)
{
  switch (kind) {
  case FilterKind::FpfDiffusionMap: return 1;
  case FilterKind::FpfConstant: return 2;
  case FilterKind::Sir: return 3;
  }
  return 0;
}

} // namespace

// ---------------------------------------------------------------------------
// Gain sweeps

void SweepSpec::validate() const
{
  if (epsilons.empty()) throw InvalidParameter("epsilons must not be empty");
  if (particle_counts.empty()) throw InvalidParameter("N must not be empty");
  if (dims.empty()) throw InvalidParameter("d must not be empty");
  if (methods.empty()) throw InvalidParameter("methods must not be empty");
  if (repetitions < 1) throw InvalidParameter("M must be at least 1");
  if (!(sigma_sq > 0.0)) throw InvalidParameter("sigma_sq must be positive");
  if (solver.iterations < 1) throw InvalidParameter("iterations must be at least 1");
  for (double e : epsilons)
    if (!(e > 0.0) || !std::isfinite(e)) throw InvalidParameter("epsilons must be positive");
  for (Index n : particle_counts)
    if (n < 2) throw InvalidParameter("N must be at least 2");
  for (Index d : dims)
    if (d < 1) throw InvalidParameter("d must be at least 1");
}

double gain_squared_error(const Eigen::Ref<const Eigen::MatrixXd>& gains,
                          const Eigen::Ref<const Eigen::MatrixXd>& exact)
{
  if (gains.rows() != exact.rows() || gains.cols() != exact.cols())
    throw InvalidInput("gain fields have different shapes");
  CompensatedSum acc;
  for (Index i = 0; i < gains.rows(); ++i) acc.add((gains.row(i) - exact.row(i)).squaredNorm());
  return acc.value() / static_cast<double>(gains.rows());
}

Eigen::MatrixXd bimodal_exact_gain(const Ensemble& ensemble, const ExactGain1D& exact)
{
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ensemble.size(), ensemble.dim());
  for (Index i = 0; i < ensemble.size(); ++i) k(i, 0) = exact(ensemble.positions()(i, 0));
  return k;
}

std::vector<MseRecord> gain_mse_sweep(const SweepSpec& spec, int threads)
{
  spec.validate();
  const ExactGain1D exact(Density1D::bimodal(spec.sigma_sq), [](double x) { return x; });
  const std::size_t n_eps = spec.epsilons.size();
  const std::size_t n_methods = spec.methods.size();
  const std::size_t reps = static_cast<std::size_t>(spec.repetitions);

  struct CellResult
  {
    std::vector<double> error; // [eps][method]
    std::vector<double> time;
    std::vector<char> failed;
  };

  struct Task
  {
    Index n;
    Index d;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (Index n : spec.particle_counts)
    for (Index d : spec.dims)
      for (std::size_t m = 0; m < reps; ++m) tasks.push_back({n, d, m});

  std::vector<CellResult> results(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    CellResult& out = results[t];
    out.error.assign(n_eps * n_methods, 0.0);
    out.time.assign(n_eps * n_methods, 0.0);
    out.failed.assign(n_eps * n_methods, 0);

    const std::uint64_t seed =
        derive_seed(spec.seed, {stream_tag::repetition, static_cast<std::uint64_t>(task.n),
                                static_cast<std::uint64_t>(task.d), task.rep});
    const Ensemble ensemble = sample_bimodal_vector(task.n, task.d, spec.sigma_sq, seed);
    const Eigen::VectorXd h = ensemble.positions().col(0);
    const Eigen::MatrixXd k_exact = bimodal_exact_gain(ensemble, exact);

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const GainMethod method = spec.methods[mi];
      if (method == GainMethod::DiffusionMap) {
        for (std::size_t e = 0; e < n_eps; ++e) {
          const std::size_t slot = e * n_methods + mi;
          const auto start = Clock::now();
          try {
            const DiffusionMapGain g = diffusion_map_gain(ensemble, h, spec.epsilons[e], spec.solver);
            out.error[slot] = gain_squared_error(g.field.gains, k_exact);
          } catch (const Error&) {
            out.failed[slot] = 1;
          }
          out.time[slot] = seconds_since(start);
        }
        continue;
      }

      // Constant and exact gains do not depend on epsilon.
      const auto start = Clock::now();
      double err = 0.0;
      char failed = 0;
      try {
        if (method == GainMethod::Constant) {
          const Eigen::VectorXd k = constant_gain(ensemble, h);
          err = gain_squared_error(k.transpose().replicate(ensemble.size(), 1), k_exact);
        } else {
          err = gain_squared_error(k_exact, k_exact);
        }
      } catch (const Error&) {
        failed = 1;
      }
      const double elapsed = seconds_since(start);
      for (std::size_t e = 0; e < n_eps; ++e) {
        const std::size_t slot = e * n_methods + mi;
        out.error[slot] = err;
        out.time[slot] = elapsed;
        out.failed[slot] = failed;
      }
    }
  });

  std::vector<MseRecord> records;
  std::size_t base = 0;
  for (Index n : spec.particle_counts) {
    for (Index d : spec.dims) {
      for (std::size_t e = 0; e < n_eps; ++e) {
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
          const std::size_t slot = e * n_methods + mi;
          CompensatedSum err;
          double time = 0.0;
          int failures = 0;
          for (std::size_t m = 0; m < reps; ++m) {
            const CellResult& r = results[base + m];
            if (r.failed[slot]) {
              ++failures;
              continue;
            }
            err.add(r.error[slot]);
            time += r.time[slot];
          }
          MseRecord rec;
          rec.epsilon = spec.epsilons[e];
          rec.n = n;
          rec.d = d;
          rec.method = spec.methods[mi];
          rec.failures = failures;
          const int ok = spec.repetitions - failures;
          rec.mse = ok > 0 ? err.value() / ok : std::numeric_limits<double>::quiet_NaN();
          rec.wall_time = spec.record_wall_time ? time : 0.0;
          records.push_back(rec);
        }
      }
      base += reps;
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Filtering

std::string_view to_string(FilterKind kind)
{
  switch (kind) {
  case FilterKind::FpfDiffusionMap: return "fpf-dm";
  case FilterKind::FpfConstant: return "fpf-constant";
  case FilterKind::Sir: return "sir";
  }
  return "unknown";
}

FilterKind filter_kind_from_string(std::string_view name)
{
  if (name == "fpf-dm") return FilterKind::FpfDiffusionMap;
  if (name == "fpf-constant") return FilterKind::FpfConstant;
  if (name == "sir") return FilterKind::Sir;
  throw InvalidParameter("unknown filter method '" + std::string(name) + "'");
}

std::vector<MseSeries> filter_mse_run(const FilterRunSpec& spec, const TestFunction& psi,
                                      const ReferenceMoment& reference, int threads)
{
  spec.scenario.validate();
  if (spec.particles < 2) throw InvalidParameter("N must be at least 2");
  if (spec.repetitions < 1) throw InvalidParameter("M must be at least 1");
  if (spec.methods.empty()) throw InvalidParameter("methods must not be empty");

  const int steps = spec.scenario.steps;
  const std::size_t n_methods = spec.methods.size();
  const std::size_t points = static_cast<std::size_t>(steps) + 1;

  struct RepResult
  {
    std::vector<std::vector<double>> sq_error; // [method][k]
    std::vector<char> failed;
  };
  std::vector<RepResult> results(static_cast<std::size_t>(spec.repetitions));

  parallel_for(results.size(), threads, [&](std::size_t m) {
    RepResult& out = results[m];
    out.sq_error.assign(n_methods, std::vector<double>(points, 0.0));
    out.failed.assign(n_methods, 0);

    ScenarioConfig scenario = spec.scenario;
    scenario.seed = derive_seed(spec.scenario.seed, {stream_tag::repetition, m});
    const TruthPath truth = simulate_truth(scenario);
    const Ensemble initial = sample_prior(scenario, spec.particles, scenario.seed);

    std::vector<double> ref(points);
    for (std::size_t k = 0; k < points; ++k) ref[k] = reference(truth, static_cast<int>(k));

    auto ensemble_mean = [&](const Eigen::MatrixXd& x) {
      CompensatedSum acc;
      for (Index i = 0; i < x.rows(); ++i) acc.add(psi(x.row(i).transpose()));
      return acc.value() / static_cast<double>(x.rows());
    };

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
      const FilterKind kind = spec.methods[mi];
      std::vector<double>& sq = out.sq_error[mi];
      try {
        if (kind == FilterKind::Sir) {
          WeightedEnsemble w = WeightedEnsemble::uniform(initial);
          ParticleNoise noise(scenario.seed, filter_tag(kind), spec.particles, scenario.dim,
                              scenario.zero_noise);
          Stream resampler(derive_seed(scenario.seed, {stream_tag::resample}));
          sq[0] = std::pow(w.expectation(psi) - ref[0], 2);
          for (int k = 0; k < steps; ++k) {
            try {
              w = sir_step(w, truth.observations.increments[static_cast<std::size_t>(k)], scenario,
                           noise, resampler);
            } catch (const Error& e) {
              throw FilterStepError(k, e.what());
            }
            sq[static_cast<std::size_t>(k) + 1] = std::pow(w.expectation(psi) - ref[static_cast<std::size_t>(k) + 1], 2);
          }
        } else {
          FpfGainOptions options = spec.dm_options;
          options.method =
              kind == FilterKind::FpfDiffusionMap ? GainMethod::DiffusionMap : GainMethod::Constant;
          FeedbackParticleFilter filter(initial, scenario, options, filter_tag(kind));
          sq[0] = std::pow(ensemble_mean(filter.ensemble().positions()) - ref[0], 2);
          for (int k = 0; k < steps; ++k) {
            filter.step(truth.observations.increments[static_cast<std::size_t>(k)]);
            sq[static_cast<std::size_t>(k) + 1] =
                std::pow(ensemble_mean(filter.ensemble().positions()) - ref[static_cast<std::size_t>(k) + 1], 2);
          }
        }
      } catch (const Error&) {
        out.failed[mi] = 1;
      }
    }
  });

  std::vector<MseSeries> series(n_methods);
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    MseSeries& s = series[mi];
    s.method = spec.methods[mi];
    s.times.resize(points);
    s.mse.assign(points, 0.0);
    int ok = 0;
    for (const RepResult& r : results) {
      if (r.failed[mi]) {
        ++s.failures;
        continue;
      }
      ++ok;
      for (std::size_t k = 0; k < points; ++k) s.mse[k] += r.sq_error[mi][k];
    }
    for (std::size_t k = 0; k < points; ++k) {
      s.times[k] = static_cast<double>(k) * spec.scenario.dt;
      s.mse[k] = ok > 0 ? s.mse[k] / ok : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return series;
}

ScenarioConfig static_example_scenario(double sigma_w, double dt, int steps, std::uint64_t seed)
{
  ScenarioConfig c;
  c.dim = 1;
  c.observation = [](const Eigen::VectorXd& x) { return std::abs(x[0]); };
  c.process_noise = 0.0;
  c.sigma_w = sigma_w;
  c.prior = [](Stream& s) { return Eigen::VectorXd::Constant(1, s.normal()); };
  c.prior_density = Density1D::gaussian(0.0, 1.0);
  c.dt = dt;
  c.steps = steps;
  c.seed = seed;
  return c;
}

ReferenceMoment static_example_reference(const ScenarioConfig& scenario, ScalarFunction psi)
{
  if (!scenario.prior_density) throw InvalidParameter("static reference needs a prior density");
  const Density1D prior = *scenario.prior_density;
  const double sigma_w = scenario.sigma_w;
  const double dt = scenario.dt;
  return [prior, sigma_w, dt, psi](const TruthPath& truth, int k) {
    CompensatedSum z;
    for (int j = 0; j < k; ++j) z.add(truth.observations.increments[static_cast<std::size_t>(j)]);
    return StaticPosterior(prior, sigma_w, z.value(), k * dt).expectation(psi);
  };
}

double negative_part_identity(double x)
{
  return x <= 0.0 ? x : 0.0;
}

std::vector<MseSeries> filtering_mse_run(const FilterRunSpec& spec, const ScalarFunction& psi,
                                         int threads)
{
  const ReferenceMoment reference = static_example_reference(spec.scenario, psi);
  return filter_mse_run(spec, [psi](const Eigen::VectorXd& x) { return psi(x[0]); }, reference,
                        threads);
}

ScenarioConfig benes_scenario(const BenesParams& params, double dt, int steps, std::uint64_t seed)
{
  params.validate();
  ScenarioConfig c;
  c.dim = 1;
  c.drift = [params](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, params.drift(x[0]));
  };
  c.observation = [params](const Eigen::VectorXd& x) { return params.observation(x[0]); };
  c.process_noise = params.sigma_b;
  c.sigma_w = 1.0;
  c.prior = [x0 = params.x0](Stream&) { return Eigen::VectorXd::Constant(1, x0); };
  c.dt = dt;
  c.steps = steps;
  c.seed = seed;
  return c;
}

std::vector<MseSeries> benes_run(const BenesParams& params, const FilterRunSpec& spec, int threads)
{
  params.validate();
  const double dt = spec.scenario.dt;
  ReferenceMoment reference = [params, dt](const TruthPath& truth, int k) {
    if (k == 0) return params.x0;
    BenesPsiAccumulator psi(params);
    for (int j = 0; j < k; ++j)
      psi.add(truth.observations.times[static_cast<std::size_t>(j)],
              truth.observations.increments[static_cast<std::size_t>(j)]);
    const double t = k * dt;
    return exact_benes_posterior(params, t, psi.value(t)).mean();
  };
  return filter_mse_run(spec, [](const Eigen::VectorXd& x) { return x[0]; }, reference, threads);
}

double time_average(const MseSeries& series)
{
  if (series.mse.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  CompensatedSum acc;
  for (std::size_t k = 1; k < series.mse.size(); ++k) acc.add(series.mse[k]);
  return acc.value() / static_cast<double>(series.mse.size() - 1);
}

// ---------------------------------------------------------------------------
// Runtime scaling

void BenchSpec::validate() const
{
  if (particle_counts.size() < 2) throw InvalidParameter("bench needs at least two values of N");
  for (std::size_t i = 0; i < particle_counts.size(); ++i) {
    if (particle_counts[i] < 2) throw InvalidParameter("N must be at least 2");
    if (i > 0 && particle_counts[i] <= particle_counts[i - 1])
      throw InvalidParameter("N values must be strictly increasing");
  }
  if (dim < 1) throw InvalidParameter("d must be at least 1");
  if (repeats < 1) throw InvalidParameter("repeats must be at least 1");
  if (iterations < 1) throw InvalidParameter("iterations must be at least 1");
}

std::vector<BenchRecord> runtime_bench(const BenchSpec& spec)
{
  spec.validate();
  constexpr double kMinBatchSeconds = 0.05;
  const FixedPointOptions solver{spec.iterations, 0.0};

  // Times one call of fn, batching calls so each sample spans kMinBatchSeconds.
  // One untimed call first touches the allocations; the fastest sample is kept
  // because interference from other work only ever adds time.
  auto measure = [&](const std::function<void()>& fn) {
    fn();
    std::vector<double> samples;
    for (int r = 0; r < spec.repeats; ++r) {
      long calls = 0;
      const auto start = Clock::now();
      double elapsed = 0.0;
      do {
        fn();
        ++calls;
        elapsed = seconds_since(start);
      } while (elapsed < kMinBatchSeconds);
      samples.push_back(elapsed / static_cast<double>(calls));
    }
    return *std::min_element(samples.begin(), samples.end());
  };

  std::vector<BenchRecord> records;
  for (Index n : spec.particle_counts) {
    const Ensemble ensemble =
        sample_bimodal_vector(n, spec.dim, 0.2, derive_seed(spec.seed, {static_cast<std::uint64_t>(n)}));
    const Eigen::VectorXd h = ensemble.positions().col(0);
    const double epsilon = median_bandwidth(ensemble);
    volatile double sink = 0.0;

    const double dm = measure([&] {
      const DiffusionMapGain g = diffusion_map_gain(ensemble, h, epsilon, solver);
      sink = sink + g.field.gains(0, 0);
    });
    const double cg = measure([&] {
      const Eigen::VectorXd k = constant_gain(ensemble, h);
      sink = sink + k[0];
    });
    records.push_back({n, GainMethod::DiffusionMap, dm});
    records.push_back({n, GainMethod::Constant, cg});
  }
  return records;
}

double loglog_slope(const std::vector<BenchRecord>& records, GainMethod method)
{
  std::vector<double> xs;
  std::vector<double> ys;
  for (const BenchRecord& r : records) {
    if (r.method != method) continue;
    xs.push_back(std::log(static_cast<double>(r.n)));
    ys.push_back(std::log(r.seconds));
  }
  if (xs.size() < 2) throw InvalidParameter("slope needs at least two records for the method");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

} // namespace fpfgain

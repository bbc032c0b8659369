#include "fpfgain/runner.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace fpfgain {

namespace {

ScalarField observation_field(const std::string& name)
{
  if (name == "x1") return [](const Eigen::VectorXd& x) { return x[0]; };
  if (name == "abs") return [](const Eigen::VectorXd& x) { return std::abs(x[0]); };
  if (name == "square") return [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  if (name == "zero") return [](const Eigen::VectorXd&) { return 0.0; };
  throw InvalidParameter("unknown observation '" + name + "'");
}

FilterRunSpec filter_spec(const FilterParams& p, ScenarioConfig scenario)
{
  FilterRunSpec spec;
  spec.scenario = std::move(scenario);
  spec.particles = p.particles;
  spec.repetitions = p.repetitions;
  spec.methods = p.methods;
  spec.dm_options.method = GainMethod::DiffusionMap;
  spec.dm_options.epsilon = p.epsilon;
  spec.dm_options.reselect_epsilon = p.reselect_epsilon;
  spec.dm_options.solver = {p.iterations, p.tolerance};
  spec.dm_options.warm_start = p.warm_start;
  return spec;
}

struct Outcome
{
  std::string csv;
  bool all_failed = false;
};

Outcome run_gain_sweep(const RunConfig& config, std::ostream& log)
{
  const GainSweepParams& p = config.sweep;
  SweepSpec spec;
  spec.epsilons = p.epsilons;
  spec.particle_counts = p.particle_counts;
  spec.dims = p.dims;
  spec.repetitions = p.repetitions;
  spec.sigma_sq = p.sigma_sq;
  spec.seed = config.seed;
  spec.solver = {p.iterations, p.tolerance};
  spec.methods = p.methods;
  spec.record_wall_time = p.record_wall_time;

  const std::vector<MseRecord> records = gain_mse_sweep(spec, config.threads);
  Outcome out;
  out.all_failed = true;
  out.csv = "epsilon,N,d,method,mse,wall_time_s\n";
  int failures = 0;
  for (const MseRecord& r : records) {
    out.csv += fmt::format("{},{},{},{},{},{}\n", format_real(r.epsilon), r.n, r.d,
                           to_string(r.method), format_real(r.mse), format_real(r.wall_time));
    if (r.failures < p.repetitions) out.all_failed = false;
    failures += r.failures;
  }
  log << fmt::format("gain-sweep: {} records, {} failed cells\n", records.size(), failures);
  return out;
}

Outcome series_csv(const std::vector<MseSeries>& series, int repetitions, std::ostream& log,
                   std::string_view label)
{
  Outcome out;
  out.all_failed = true;
  out.csv = "t,method,mse\n";
  for (const MseSeries& s : series) {
    for (std::size_t k = 0; k < s.times.size(); ++k)
      out.csv += fmt::format("{},{},{}\n", format_real(s.times[k]), to_string(s.method),
                             format_real(s.mse[k]));
    if (s.failures < repetitions) out.all_failed = false;
    log << fmt::format("{}: {} time-averaged mse {} ({} failed runs)\n", label, to_string(s.method),
                       format_real(time_average(s)), s.failures);
  }
  return out;
}

Outcome run_filter_static(const RunConfig& config, std::ostream& log)
{
  const FilterStaticParams& p = config.filter_static;
  const FilterRunSpec spec = filter_spec(
      p.filter, static_example_scenario(p.sigma_w, p.filter.dt, p.filter.steps, config.seed));
  return series_csv(filtering_mse_run(spec, negative_part_identity, config.threads),
                    p.filter.repetitions, log, "filter-static");
}

Outcome run_benes(const RunConfig& config, std::ostream& log)
{
  const BenesRunParams& p = config.benes;
  const FilterRunSpec spec = filter_spec(
      p.filter, benes_scenario(p.params(), p.filter.dt, p.filter.steps, config.seed));
  return series_csv(benes_run(p.params(), spec, config.threads), p.filter.repetitions, log,
                    "benes");
}

Outcome run_bench(const RunConfig& config, std::ostream& log)
{
  BenchSpec spec;
  spec.particle_counts = config.bench.particle_counts;
  spec.dim = config.bench.dim;
  spec.repeats = config.bench.repeats;
  spec.iterations = config.bench.iterations;
  spec.seed = config.seed;
  const std::vector<BenchRecord> records = runtime_bench(spec);

  Outcome out;
  out.csv = "N,method,seconds\n";
  for (const BenchRecord& r : records)
    out.csv += fmt::format("{},{},{}\n", r.n, to_string(r.method), format_real(r.seconds));
  for (GainMethod m : {GainMethod::DiffusionMap, GainMethod::Constant})
    log << fmt::format("bench: {} log-log slope {:.3f}\n", to_string(m), loglog_slope(records, m));
  return out;
}

Outcome run_gain_once(const RunConfig& config, std::ostream& log)
{
  const GainOnceParams& p = config.gain_once;
  const Index n = static_cast<Index>(p.particles.size());
  const Index d = static_cast<Index>(p.particles.front().size());
  Eigen::MatrixXd x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = p.particles[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const Ensemble ensemble(x);
  const Eigen::VectorXd h = evaluate_at_particles(observation_field(p.observation), ensemble);
  const double epsilon = p.epsilon ? *p.epsilon : median_bandwidth(ensemble);
  const DiffusionMapGain g = diffusion_map_gain(ensemble, h, epsilon, {p.iterations, p.tolerance});

  Outcome out;
  out.csv = "particle,phi";
  for (Index j = 0; j < d; ++j) out.csv += fmt::format(",K_{}", j + 1);
  out.csv += "\n";
  for (Index i = 0; i < n; ++i) {
    out.csv += fmt::format("{},{}", i, format_real(g.solution.phi[i]));
    for (Index j = 0; j < d; ++j) out.csv += "," + format_real(g.field.gains(i, j));
    out.csv += "\n";
  }
  log << fmt::format("gain-once: epsilon {} after {} iterations\n", format_real(epsilon),
                     g.solution.iterations_run);
  log << out.csv;
  return out;
}

} // namespace

std::string format_real(double value)
{
  return fmt::format("{:.17g}", value);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents)
{
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream stream(tmp, std::ios::binary | std::ios::trunc);
    stream << contents;
    stream.flush();
    if (!stream)
      throw fs::filesystem_error("cannot write file", tmp,
                                 std::make_error_code(std::errc::io_error));
  }
  fs::rename(tmp, path);
}

int run(const RunConfig& config, std::ostream& log)
{
  Outcome outcome;
  try {
    switch (config.command) {
    case Command::GainSweep: outcome = run_gain_sweep(config, log); break;
    case Command::FilterStatic: outcome = run_filter_static(config, log); break;
    case Command::Benes: outcome = run_benes(config, log); break;
    case Command::Bench: outcome = run_bench(config, log); break;
    case Command::GainOnce: outcome = run_gain_once(config, log); break;
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code::numerical_failure;
  }

  nlohmann::json sidecar;
  sidecar["config"] = nlohmann::json::parse(to_json(config));
  sidecar["seed"] = config.seed;
  sidecar["version"] = FPFGAIN_VERSION;
  try {
    write_file_atomic(config.output, outcome.csv);
    write_file_atomic(config.output + ".json", sidecar.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_code::io_failure;
  }
  if (outcome.all_failed) {
    log << "error: every cell failed\n";
    return exit_code::numerical_failure;
  }
  return exit_code::ok;
}

} // namespace fpfgain

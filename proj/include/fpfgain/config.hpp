#pragma once

#include "fpfgain/errors.hpp"
#include "fpfgain/experiments.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpfgain {

enum class Command
{
  GainSweep,
  FilterStatic,
  Benes,
  Bench,
  GainOnce,
};

std::string_view to_string(Command command);
std::optional<Command> command_from_string(std::string_view name);

/// Bad configuration; path names the offending field ("dt", "sigma_B", "particles[2]", ...).
class ConfigError : public Error
{
public:
  ConfigError(std::string path, const std::string& message);
  const std::string& path() const { return m_path; }

private:
  std::string m_path;
};

struct GainSweepParams
{
  std::vector<double> epsilons;
  std::vector<Index> particle_counts{200};
  std::vector<Index> dims{1};
  int repetitions = 100;
  double sigma_sq = 0.2;
  int iterations = kSweepIterations;
  double tolerance = kDefaultTolerance;
  std::vector<GainMethod> methods{GainMethod::DiffusionMap, GainMethod::Constant};
  bool record_wall_time = false;

  bool operator==(const GainSweepParams&) const = default;
};

/// Filter settings shared by filter-static and benes.
struct FilterParams
{
  Index particles = 200;
  double dt = 0.001;
  int steps = 500;
  int repetitions = 100;
  std::optional<double> epsilon; // absent: median heuristic
  bool reselect_epsilon = false;
  int iterations = kFilterIterations;
  double tolerance = kDefaultTolerance;
  bool warm_start = false;
  std::vector<FilterKind> methods{FilterKind::FpfDiffusionMap, FilterKind::FpfConstant,
                                  FilterKind::Sir};

  bool operator==(const FilterParams&) const = default;
};

struct FilterStaticParams
{
  FilterParams filter{.epsilon = 0.1};
  double sigma_w = 0.1;

  bool operator==(const FilterStaticParams&) const = default;
};

struct BenesRunParams
{
  FilterParams filter{.dt = 0.01, .steps = 1000, .epsilon = std::nullopt, .reselect_epsilon = true};
  double mu = 0.5;
  double sigma_b = 0.8;
  double h1 = 0.4;
  double h2 = 0.0;
  double x0 = 1.0;

  BenesParams params() const { return {mu, sigma_b, h1, h2, x0}; }
  bool operator==(const BenesRunParams&) const = default;
};

struct BenchParams
{
  std::vector<Index> particle_counts{250, 500, 1000, 2000};
  Index dim = 1;
  int repeats = 5;
  int iterations = 10;

  bool operator==(const BenchParams&) const = default;
};

struct GainOnceParams
{
  std::vector<std::vector<double>> particles; // one inner vector per particle
  std::string observation = "x1";             // x1 | abs | square | zero
  std::optional<double> epsilon;              // absent: median heuristic
  int iterations = kSweepIterations;
  double tolerance = kDefaultTolerance;

  bool operator==(const GainOnceParams&) const = default;
};

struct RunConfig
{
  Command command = Command::GainSweep;
  std::uint64_t seed = 0;
  std::string output;
  int threads = 1;

  GainSweepParams sweep;
  FilterStaticParams filter_static;
  BenesRunParams benes;
  BenchParams bench;
  GainOnceParams gain_once;

  bool operator==(const RunConfig&) const = default;
};

/// Log-spaced default grid on [0.01, 10].
std::vector<double> default_epsilon_grid();

/// Overrides supplied on the command line; they win over the JSON text.
struct FlagOverrides
{
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> threads;
};

/// Parses and validates a JSON configuration for the given command. Unknown keys,
/// missing seed/output and out-of-range values raise ConfigError.
RunConfig parse_config(Command command, std::string_view json_text, const FlagOverrides& flags = {});

/// Effective configuration as JSON (parse_config(to_json(c)) == c).
std::string to_json(const RunConfig& config);

} // namespace fpfgain

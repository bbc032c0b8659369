#include "fpfgain/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

namespace fpfgain {

using nlohmann::json;

std::string_view to_string(Command command)
{
  switch (command) {
  case Command::GainSweep: return "gain-sweep";
  case Command::FilterStatic: return "filter-static";
  case Command::Benes: return "benes";
  case Command::Bench: return "bench";
  case Command::GainOnce: return "gain-once";
  }
  return "unknown";
}

std::optional<Command> command_from_string(std::string_view name)
{
  for (Command c : {Command::GainSweep, Command::FilterStatic, Command::Benes, Command::Bench,
                    Command::GainOnce})
    if (to_string(c) == name) return c;
  return std::nullopt;
}

ConfigError::ConfigError(std::string path, const std::string& message)
    : Error(path.empty() ? message : path + ": " + message), m_path(std::move(path))
{
}

std::vector<double> default_epsilon_grid()
{
  std::vector<double> grid;
  for (int k = 0; k <= 12; ++k) grid.push_back(std::pow(10.0, -2.0 + 0.25 * k));
  return grid;
}

namespace {

// Typed readers that report the field path on failure.
class Reader
{
public:
  explicit Reader(const json& object) : m_object(object) {}

  bool has(const std::string& key) const
  {
    return m_object.contains(key) && !m_object.at(key).is_null();
  }

  const json& at(const std::string& key) const { return m_object.at(key); }

  double real(const std::string& key, double fallback) const
  {
    if (!has(key)) return fallback;
    return to_real(at(key), key);
  }

  std::optional<double> optional_real(const std::string& key,
                                      std::optional<double> fallback) const
  {
    if (!m_object.contains(key)) return fallback;
    if (m_object.at(key).is_null()) return std::nullopt;
    return to_real(at(key), key);
  }

  long long integer(const std::string& key, long long fallback) const
  {
    if (!has(key)) return fallback;
    return to_integer(at(key), key);
  }

  bool boolean(const std::string& key, bool fallback) const
  {
    if (!has(key)) return fallback;
    if (!at(key).is_boolean()) throw ConfigError(key, "expected a boolean");
    return at(key).get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const
  {
    if (!has(key)) return fallback;
    if (!at(key).is_string()) throw ConfigError(key, "expected a string");
    return at(key).get<std::string>();
  }

  std::vector<double> real_list(const std::string& key, const std::vector<double>& fallback) const
  {
    if (!has(key)) return fallback;
    std::vector<double> out;
    const json& list = array(key);
    for (std::size_t i = 0; i < list.size(); ++i)
      out.push_back(to_real(list[i], key + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<Index> index_list(const std::string& key, const std::vector<Index>& fallback) const
  {
    if (!has(key)) return fallback;
    std::vector<Index> out;
    const json& list = array(key);
    for (std::size_t i = 0; i < list.size(); ++i)
      out.push_back(static_cast<Index>(to_integer(list[i], key + "[" + std::to_string(i) + "]")));
    return out;
  }

  std::vector<std::string> string_list(const std::string& key,
                                       const std::vector<std::string>& fallback) const
  {
    if (!has(key)) return fallback;
    std::vector<std::string> out;
    const json& list = array(key);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string())
        throw ConfigError(key + "[" + std::to_string(i) + "]", "expected a string");
      out.push_back(list[i].get<std::string>());
    }
    return out;
  }

  const json& array(const std::string& key) const
  {
    if (!at(key).is_array()) throw ConfigError(key, "expected an array");
    return at(key);
  }

  static double to_real(const json& value, const std::string& path)
  {
    if (!value.is_number()) throw ConfigError(path, "expected a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
  }

  static long long to_integer(const json& value, const std::string& path)
  {
    if (!value.is_number_integer()) throw ConfigError(path, "expected an integer");
    if (value.is_number_unsigned() && value.get<std::uint64_t>() > 1ULL << 62)
      throw ConfigError(path, "integer out of range");
    return value.get<long long>();
  }

private:
  const json& m_object;
};

void require(bool condition, const std::string& path, const std::string& message)
{
  if (!condition) throw ConfigError(path, message);
}

void check_keys(const json& object, const std::set<std::string>& allowed)
{
  for (const auto& item : object.items())
    if (!allowed.count(item.key())) throw ConfigError(item.key(), "unknown key");
}

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& values)
{
  std::vector<std::string> out;
  for (const T& v : values) out.emplace_back(to_string(v));
  return out;
}

void check_positive_list(const std::vector<double>& values, const std::string& key)
{
  require(!values.empty(), key, "must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i)
    require(values[i] > 0.0, key + "[" + std::to_string(i) + "]", "must be positive");
}

void check_index_list(const std::vector<Index>& values, const std::string& key, Index minimum)
{
  require(!values.empty(), key, "must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i)
    require(values[i] >= minimum, key + "[" + std::to_string(i) + "]",
            "must be at least " + std::to_string(minimum));
}

const std::set<std::string> kCommonKeys{"command", "seed", "output", "threads"};

std::set<std::string> with_common(std::set<std::string> keys)
{
  keys.insert(kCommonKeys.begin(), kCommonKeys.end());
  return keys;
}

const std::set<std::string> kFilterKeys{"N",           "dt",         "steps",      "M",
                                        "epsilon",     "reselect_epsilon", "iterations",
                                        "tolerance",   "warm_start", "methods"};

void parse_solver(const Reader& r, int& iterations, double& tolerance)
{
  iterations = static_cast<int>(r.integer("iterations", iterations));
  tolerance = r.real("tolerance", tolerance);
  require(iterations >= 1, "iterations", "must be at least 1");
  require(tolerance >= 0.0, "tolerance", "must be non-negative");
}

GainSweepParams parse_sweep(const Reader& r)
{
  GainSweepParams p;
  p.epsilons = r.real_list("epsilons", default_epsilon_grid());
  p.particle_counts = r.index_list("N", p.particle_counts);
  p.dims = r.index_list("d", p.dims);
  p.repetitions = static_cast<int>(r.integer("M", p.repetitions));
  p.sigma_sq = r.real("sigma_sq", p.sigma_sq);
  parse_solver(r, p.iterations, p.tolerance);
  p.record_wall_time = r.boolean("record_wall_time", p.record_wall_time);
  const auto methods = r.string_list("methods", names_of(p.methods));
  p.methods.clear();
  for (std::size_t i = 0; i < methods.size(); ++i) {
    try {
      p.methods.push_back(gain_method_from_string(methods[i]));
    } catch (const InvalidParameter& e) {
      throw ConfigError("methods[" + std::to_string(i) + "]", e.what());
    }
  }
  check_positive_list(p.epsilons, "epsilons");
  check_index_list(p.particle_counts, "N", 2);
  check_index_list(p.dims, "d", 1);
  require(!p.methods.empty(), "methods", "must not be empty");
  require(p.repetitions >= 1, "M", "must be at least 1");
  require(p.sigma_sq > 0.0, "sigma_sq", "must be positive");
  return p;
}

FilterParams parse_filter(const Reader& r, FilterParams p)
{
  p.particles = static_cast<Index>(r.integer("N", p.particles));
  p.dt = r.real("dt", p.dt);
  p.steps = static_cast<int>(r.integer("steps", p.steps));
  p.repetitions = static_cast<int>(r.integer("M", p.repetitions));
  p.epsilon = r.optional_real("epsilon", p.epsilon);
  p.reselect_epsilon = r.boolean("reselect_epsilon", p.reselect_epsilon);
  parse_solver(r, p.iterations, p.tolerance);
  p.warm_start = r.boolean("warm_start", p.warm_start);
  const auto methods = r.string_list("methods", names_of(p.methods));
  p.methods.clear();
  for (std::size_t i = 0; i < methods.size(); ++i) {
    try {
      p.methods.push_back(filter_kind_from_string(methods[i]));
    } catch (const InvalidParameter& e) {
      throw ConfigError("methods[" + std::to_string(i) + "]", e.what());
    }
  }
  require(p.particles >= 2, "N", "must be at least 2");
  require(p.dt > 0.0, "dt", "must be positive");
  require(p.steps >= 1, "steps", "must be at least 1");
  require(p.repetitions >= 1, "M", "must be at least 1");
  require(!p.epsilon || *p.epsilon > 0.0, "epsilon", "must be positive");
  require(!p.methods.empty(), "methods", "must not be empty");
  return p;
}

BenchParams parse_bench(const Reader& r)
{
  BenchParams p;
  p.particle_counts = r.index_list("N", p.particle_counts);
  p.dim = static_cast<Index>(r.integer("d", p.dim));
  p.repeats = static_cast<int>(r.integer("repeats", p.repeats));
  p.iterations = static_cast<int>(r.integer("iterations", p.iterations));
  check_index_list(p.particle_counts, "N", 2);
  require(p.particle_counts.size() >= 2, "N", "needs at least two values");
  for (std::size_t i = 1; i < p.particle_counts.size(); ++i)
    require(p.particle_counts[i] > p.particle_counts[i - 1], "N[" + std::to_string(i) + "]",
            "values must be strictly increasing");
  require(p.dim >= 1, "d", "must be at least 1");
  require(p.repeats >= 1, "repeats", "must be at least 1");
  require(p.iterations >= 1, "iterations", "must be at least 1");
  return p;
}

GainOnceParams parse_gain_once(const Reader& r)
{
  GainOnceParams p;
  require(r.has("particles"), "particles", "required field is missing");
  const json& list = r.array("particles");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "particles[" + std::to_string(i) + "]";
    std::vector<double> particle;
    if (list[i].is_number()) {
      particle.push_back(Reader::to_real(list[i], path));
    } else {
      require(list[i].is_array() && !list[i].empty(), path, "expected a number or a non-empty array");
      for (std::size_t j = 0; j < list[i].size(); ++j)
        particle.push_back(Reader::to_real(list[i][j], path + "[" + std::to_string(j) + "]"));
    }
    if (!p.particles.empty())
      require(particle.size() == p.particles.front().size(), path, "dimension mismatch");
    p.particles.push_back(std::move(particle));
  }
  require(p.particles.size() >= 2, "particles", "needs at least two particles");
  p.observation = r.string("observation", p.observation);
  require(p.observation == "x1" || p.observation == "abs" || p.observation == "square" ||
              p.observation == "zero",
          "observation", "expected one of x1, abs, square, zero");
  p.epsilon = r.optional_real("epsilon", p.epsilon);
  require(!p.epsilon || *p.epsilon > 0.0, "epsilon", "must be positive");
  parse_solver(r, p.iterations, p.tolerance);
  return p;
}

json filter_json(const FilterParams& p)
{
  json j;
  j["N"] = p.particles;
  j["dt"] = p.dt;
  j["steps"] = p.steps;
  j["M"] = p.repetitions;
  j["epsilon"] = p.epsilon ? json(*p.epsilon) : json(nullptr);
  j["reselect_epsilon"] = p.reselect_epsilon;
  j["iterations"] = p.iterations;
  j["tolerance"] = p.tolerance;
  j["warm_start"] = p.warm_start;
  j["methods"] = names_of(p.methods);
  return j;
}

} // namespace

RunConfig parse_config(Command command, std::string_view json_text, const FlagOverrides& flags)
{
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("", "top level must be a JSON object");
  const Reader r(root);

  RunConfig config;
  config.command = command;
  if (r.has("command")) {
    const auto named = command_from_string(r.string("command", ""));
    require(named.has_value(), "command", "unknown command");
    require(*named == command, "command", "does not match the command line");
  }

  switch (command) {
  case Command::GainSweep:
    check_keys(root, with_common({"epsilons", "N", "d", "M", "sigma_sq", "iterations", "tolerance",
                                  "methods", "record_wall_time"}));
    config.sweep = parse_sweep(r);
    break;
  case Command::FilterStatic: {
    auto keys = with_common(kFilterKeys);
    keys.insert("sigma_w");
    check_keys(root, keys);
    config.filter_static.filter = parse_filter(r, config.filter_static.filter);
    config.filter_static.sigma_w = r.real("sigma_w", config.filter_static.sigma_w);
    require(config.filter_static.sigma_w > 0.0, "sigma_w", "must be positive");
    break;
  }
  case Command::Benes: {
    auto keys = with_common(kFilterKeys);
    keys.insert({"mu", "sigma_B", "h1", "h2", "x0"});
    check_keys(root, keys);
    BenesRunParams& b = config.benes;
    b.filter = parse_filter(r, b.filter);
    b.mu = r.real("mu", b.mu);
    b.sigma_b = r.real("sigma_B", b.sigma_b);
    b.h1 = r.real("h1", b.h1);
    b.h2 = r.real("h2", b.h2);
    b.x0 = r.real("x0", b.x0);
    require(b.sigma_b > 0.0, "sigma_B", "must be positive");
    require(b.h1 != 0.0, "h1", "must be non-zero");
    break;
  }
  case Command::Bench:
    check_keys(root, with_common({"N", "d", "repeats", "iterations"}));
    config.bench = parse_bench(r);
    break;
  case Command::GainOnce:
    check_keys(root, with_common({"particles", "observation", "epsilon", "iterations", "tolerance"}));
    config.gain_once = parse_gain_once(r);
    break;
  }

  if (flags.seed) {
    config.seed = *flags.seed;
  } else {
    require(r.has("seed"), "seed", "required field is missing");
    const json& s = r.at("seed");
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0), "seed",
            "expected a non-negative integer");
    config.seed = s.get<std::uint64_t>();
  }
  if (flags.output) {
    config.output = *flags.output;
  } else {
    require(r.has("output"), "output", "required field is missing");
    config.output = r.string("output", "");
  }
  require(!config.output.empty(), "output", "must not be empty");
  config.threads = flags.threads ? *flags.threads : static_cast<int>(r.integer("threads", 1));
  require(config.threads >= 1, "threads", "must be at least 1");
  return config;
}

std::string to_json(const RunConfig& config)
{
  json j;
  switch (config.command) {
  case Command::GainSweep: {
    const GainSweepParams& p = config.sweep;
    j["epsilons"] = p.epsilons;
    j["N"] = p.particle_counts;
    j["d"] = p.dims;
    j["M"] = p.repetitions;
    j["sigma_sq"] = p.sigma_sq;
    j["iterations"] = p.iterations;
    j["tolerance"] = p.tolerance;
    j["methods"] = names_of(p.methods);
    j["record_wall_time"] = p.record_wall_time;
    break;
  }
  case Command::FilterStatic:
    j = filter_json(config.filter_static.filter);
    j["sigma_w"] = config.filter_static.sigma_w;
    break;
  case Command::Benes:
    j = filter_json(config.benes.filter);
    j["mu"] = config.benes.mu;
    j["sigma_B"] = config.benes.sigma_b;
    j["h1"] = config.benes.h1;
    j["h2"] = config.benes.h2;
    j["x0"] = config.benes.x0;
    break;
  case Command::Bench:
    j["N"] = config.bench.particle_counts;
    j["d"] = config.bench.dim;
    j["repeats"] = config.bench.repeats;
    j["iterations"] = config.bench.iterations;
    break;
  case Command::GainOnce:
    j["particles"] = config.gain_once.particles;
    j["observation"] = config.gain_once.observation;
    j["epsilon"] = config.gain_once.epsilon ? json(*config.gain_once.epsilon) : json(nullptr);
    j["iterations"] = config.gain_once.iterations;
    j["tolerance"] = config.gain_once.tolerance;
    break;
  }
  j["command"] = std::string(to_string(config.command));
  j["seed"] = config.seed;
  j["output"] = config.output;
  j["threads"] = config.threads;
  return j.dump(2);
}

} // namespace fpfgain

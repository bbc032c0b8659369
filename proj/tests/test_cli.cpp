#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fpfgain/config.hpp"
#include "fpfgain/runner.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fpfgain;
namespace fs = std::filesystem;

namespace {

fs::path scratch()
{
  const fs::path dir = fs::temp_directory_path() / "fpfgain_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(FPF_GAIN_EXE) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const std::string& text)
{
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string first_line(const std::string& text)
{
  return text.substr(0, text.find('\n'));
}

} // namespace

TEST_CASE("minimal gain-sweep config gets documented defaults")
{
  const RunConfig c = parse_config(Command::GainSweep, R"({"seed": 3, "output": "o.csv"})");
  CHECK(c.seed == 3);
  CHECK(c.output == "o.csv");
  CHECK(c.threads == 1);
  CHECK(c.sweep.particle_counts == std::vector<Index>{200});
  CHECK(c.sweep.dims == std::vector<Index>{1});
  CHECK(c.sweep.sigma_sq == 0.2);
  CHECK(c.sweep.repetitions == 100);
  CHECK(c.sweep.epsilons.size() == 13);
  CHECK(c.sweep.epsilons.front() == doctest::Approx(0.01));
  CHECK(c.sweep.epsilons.back() == doctest::Approx(10.0));
  for (std::size_t i = 1; i < c.sweep.epsilons.size(); ++i)
    CHECK(c.sweep.epsilons[i] / c.sweep.epsilons[i - 1] == doctest::Approx(std::pow(10.0, 0.25)));
}

TEST_CASE("config round-trips through JSON")
{
  const std::vector<std::pair<Command, std::string>> cases{
      {Command::GainSweep, R"({"seed": 1, "output": "a.csv", "N": [50, 100], "d": [1, 3], "methods": ["diffusion-map"]})"},
      {Command::FilterStatic, R"({"seed": 2, "output": "b.csv", "M": 5, "epsilon": 0.2, "sigma_w": 0.3})"},
      {Command::Benes, R"({"seed": 3, "output": "c.csv", "steps": 10, "h1": 0.5, "epsilon": null})"},
      {Command::Bench, R"({"seed": 4, "output": "d.csv", "N": [10, 20]})"},
      {Command::GainOnce, R"({"seed": 5, "output": "e.csv", "particles": [[0, 1], [1, 2], [3, 1]], "observation": "abs"})"},
  };
  for (const auto& [command, text] : cases) {
    const RunConfig c = parse_config(command, text);
    CHECK(parse_config(command, to_json(c)) == c);
  }
}

TEST_CASE("config errors name the field")
{
  auto path_of = [](Command c, const std::string& text) {
    try {
      parse_config(c, text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  CHECK(path_of(Command::GainSweep, R"({"seed": 1, "output": "o", "bogus": 1})") == "bogus");
  CHECK(path_of(Command::GainSweep, R"({"output": "o"})") == "seed");
  CHECK(path_of(Command::GainSweep, R"({"seed": 1})") == "output");
  CHECK(path_of(Command::GainSweep, R"({"seed": 1, "output": "o", "epsilons": [0.1, -1]})") == "epsilons[1]");
  CHECK(path_of(Command::GainSweep, R"({"seed": 1, "output": "o", "M": 0})") == "M");
  CHECK(path_of(Command::GainSweep, R"({"seed": 1, "output": "o", "methods": ["magic"]})") == "methods[0]");
  CHECK(path_of(Command::FilterStatic, R"({"seed": 1, "output": "o", "dt": 0})") == "dt");
  CHECK(path_of(Command::Benes, R"({"seed": 1, "output": "o", "sigma_B": -1})") == "sigma_B");
  CHECK(path_of(Command::Bench, R"({"seed": 1, "output": "o", "N": [20, 10]})") == "N[1]");
  CHECK(path_of(Command::GainOnce, R"({"seed": 1, "output": "o", "particles": [[0], [1, 2]]})") == "particles[1]");
  CHECK(path_of(Command::GainOnce, R"({"seed": 1, "output": "o"})") == "particles");
  CHECK(path_of(Command::Bench, R"({"seed": 1, "output": "o", "command": "benes"})") == "command");
  CHECK_THROWS_AS(parse_config(Command::Bench, "{not json"), ConfigError);
}

TEST_CASE("flag overrides win over the file")
{
  const RunConfig c = parse_config(Command::Bench, R"({"seed": 1, "output": "o", "threads": 2})",
                                   {std::uint64_t{9}, std::string("x.csv"), 4});
  CHECK(c.seed == 9);
  CHECK(c.output == "x.csv");
  CHECK(c.threads == 4);
  CHECK(parse_config(Command::Bench, "{}", {std::uint64_t{1}, std::string("y.csv"), {}}).output == "y.csv");
}

TEST_CASE("real number formatting")
{
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(1e-20) == "9.9999999999999995e-21");
}

TEST_CASE("CSV schemas, sidecar and determinism")
{
  const fs::path dir = scratch();
  struct Case
  {
    std::string command;
    std::string config;
    std::string header;
  };
  const std::vector<Case> cases{
      {"gain-sweep", R"({"seed": 1, "epsilons": [0.1, 1], "N": [30], "M": 3})",
       "epsilon,N,d,method,mse,wall_time_s"},
      {"filter-static", R"({"seed": 2, "N": 20, "steps": 15, "M": 2})", "t,method,mse"},
      {"benes", R"({"seed": 3, "N": 20, "steps": 15, "M": 2})", "t,method,mse"},
      {"gain-once", R"({"seed": 4, "particles": [[0, 0], [1, 0], [0, 2]], "epsilon": 0.5})",
       "particle,phi,K_1,K_2"},
  };
  for (const Case& c : cases) {
    const fs::path cfg = write_config(c.command + ".json", c.config);
    const fs::path out1 = dir / (c.command + "_1.csv");
    const fs::path out2 = dir / (c.command + "_2.csv");
    REQUIRE(run_cli(c.command + " --config " + cfg.string() + " --out " + out1.string()) == 0);
    REQUIRE(run_cli(c.command + " --config " + cfg.string() + " --out " + out2.string() +
                    " --threads 3") == 0);
    const std::string csv = slurp(out1);
    CHECK(first_line(csv) == c.header);
    CHECK(csv == slurp(out2));
    const auto sidecar = nlohmann::json::parse(slurp(out1.string() + ".json"));
    CHECK(sidecar.contains("version"));
    CHECK(sidecar["config"]["command"] == c.command);
    CHECK(sidecar["seed"].is_number_unsigned());
  }

  const std::string sweep = slurp(dir / "gain-sweep_1.csv");
  std::istringstream lines(sweep);
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
    ++rows;
  }
  CHECK(rows == 4);
}

TEST_CASE("exit codes")
{
  const fs::path dir = scratch();
  const fs::path bad = write_config("bad.json", R"({"seed": 1, "output": "x.csv", "M": -1})");
  CHECK(run_cli("gain-sweep --config " + bad.string()) == exit_code::bad_config);
  CHECK(run_cli("unknown-command --config " + bad.string()) == exit_code::bad_config);
  CHECK(run_cli("gain-sweep") == exit_code::bad_config);
  CHECK(run_cli("gain-sweep --config " + (dir / "missing.json").string()) == exit_code::io_failure);

  const fs::path ok = write_config("ok.json", R"({"seed": 1, "epsilons": [1], "N": [10], "M": 1})");
  fs::path blocked = dir / "file_as_dir";
  std::ofstream(blocked) << "x";
  CHECK(run_cli("gain-sweep --config " + ok.string() + " --out " + (blocked / "o.csv").string()) ==
        exit_code::io_failure);

  // Every cell fails: gain-once on identical particles with the median rule.
  const fs::path degenerate = write_config("deg.json", R"({"seed": 1, "particles": [1, 1, 1]})");
  CHECK(run_cli("gain-once --config " + degenerate.string() + " --out " + (dir / "deg.csv").string()) ==
        exit_code::numerical_failure);
}

TEST_CASE("atomic writes replace the target")
{
  const fs::path p = scratch() / "atomic.txt";
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  CHECK(slurp(p) == "second");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
}

#include "fpfgain/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

/// FPF_GAIN_LOG=quiet silences the summary log; anything else (or unset) prints it.
bool log_enabled()
{
  const char* level = std::getenv("FPF_GAIN_LOG");
  return level == nullptr || std::string_view(level) != "quiet";
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Diffusion-map gain experiments for the feedback particle filter"};
  app.set_version_flag("--version", FPFGAIN_VERSION);

  std::string command_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<int> threads;
  app.add_option("command", command_name, "gain-sweep | filter-static | benes | bench | gain-once")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", output, "results CSV path (overrides the config)");
  app.add_option("--threads", threads, "worker threads (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fpfgain::exit_code::ok : fpfgain::exit_code::bad_config;
  }

  const auto command = fpfgain::command_from_string(command_name);
  if (!command) {
    std::cerr << "error: unknown command '" << command_name << "'\n";
    return fpfgain::exit_code::bad_config;
  }

  std::ifstream file(config_path, std::ios::binary);
  if (!file) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return fpfgain::exit_code::io_failure;
  }
  std::ostringstream text;
  text << file.rdbuf();

  fpfgain::RunConfig config;
  try {
    config = fpfgain::parse_config(*command, text.str(), {seed, output, threads});
  } catch (const fpfgain::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fpfgain::exit_code::bad_config;
  }

  std::ostringstream discard;
  return fpfgain::run(config, log_enabled() ? static_cast<std::ostream&>(std::cerr) : discard);
}

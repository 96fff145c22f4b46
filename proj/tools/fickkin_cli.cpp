#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "fickkin/commands.hpp"
#include "fickkin/config.hpp"
#include "fickkin/errors.hpp"

int main(int argc, char** argv) {
  using namespace fickkin;
  CLI::App app{"Multi-species kinetic to Fick diffusion toolkit"};
  std::string verb, config_path, out_dir;
  std::uint64_t seed = 0;
  app.add_option("verb", verb, "constants | operator | fick-matrix | verify | solve | kinetic | study")
      ->required()
      ->check(CLI::IsMember(command_verbs()));
  app.add_option("--config", config_path, "key = value configuration file")->required();
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunConfig cfg;
  try {
    KeyValueConfig kv = KeyValueConfig::load(config_path);
    if (*out_opt) kv.set("output.dir", out_dir);
    if (*seed_opt) kv.set("seed", std::to_string(seed));
    cfg = make_run_config(kv);
  } catch (const Error& e) {
    std::cerr << "config: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  const CommandResult r = run_command(verb, cfg);
  if (r.exit_code != 0) {
    std::cerr << verb << " failed in stage '" << r.stage << "': " << r.message << '\n';
  } else {
    std::cout << verb << ": ok, reports in " << cfg.out_dir << '\n';
  }
  return r.exit_code;
}

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lnpr/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Photorefraction models for LiNbO3 integrated squeezing circuits"};
  app.set_version_flag("--version", lnpr::version_string());
  app.require_subcommand(1);

  lnpr::RunFlags flags;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  for (auto name : lnpr::subcommand_names()) {
    auto* sub = app.add_subcommand(std::string(name));
    sub->add_option("--config", config_path, "YAML configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides run.output_dir)");
    sub->add_option("--seed", seed, "Random seed for synthetic data (overrides run.seed)");
    sub->add_flag("--strict", flags.strict, "Reject unknown configuration keys");
    sub->add_flag("--quiet", flags.quiet, "Suppress progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? lnpr::kExitOk : lnpr::kExitValidation;
  }

  const auto* chosen = app.get_subcommands().front();
  flags.config_path = config_path;
  if (!out_dir.empty()) flags.out_dir = out_dir;
  if (chosen->count("--seed")) flags.seed = seed;
  return lnpr::run_subcommand(chosen->get_name(), flags);
}

#include <iostream>

#include <CLI11.hpp>

#include "oplab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"oplab: operator-valued measures, CZ decompositions and finite scattering models"};
  app.set_version_flag("--version", std::string(oplab::kVersion));
  app.require_subcommand(1, 1);

  oplab::CliOptions opt;
  std::uint64_t seed = 0;
  int threads = 1;
  const struct {
    const char* name;
    const char* help;
  } commands[] = {
      {"cz", "Calderon-Zygmund decompositions with verification reports"},
      {"weaknorm", "weak quasi-norms of maximal functions against the weak-type constants"},
      {"scatter", "probes of a finite scattering model"},
      {"sweep", "seeded ensemble studies (audit, cz, resolvent)"},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config_path, "JSON config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : oplab::kExitUsage;
  }
  CLI::App* used = app.get_subcommands().front();
  opt.command = used->get_name();
  if (used->count("--seed")) opt.seed = seed;
  if (used->count("--threads")) opt.threads = threads;
  return oplab::run_command(opt);
}

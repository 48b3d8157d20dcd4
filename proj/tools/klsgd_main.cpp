#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "klsgd/config.hpp"
#include "klsgd/harness.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string seeds;
  std::size_t threads = 1;
  std::string dir;
};

void add_common(CLI::App* cmd, Flags& f, bool with_seeds) {
  cmd->add_option("--config", f.config, "Experiment configuration (YAML)")->required();
  cmd->add_option("--out", f.out, "Output directory (overrides output.dir)");
  if (with_seeds) {
    cmd->add_option("--seeds", f.seeds, "Seed count n or comma-separated list");
    cmd->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic first-order methods under the KL property: runs and certificates"};
  app.require_subcommand(1);
  Flags f;
  auto* run = app.add_subcommand("run", "Run one trajectory per seed and write CSV files");
  add_common(run, f, true);
  auto* certify = app.add_subcommand("certify", "Check descent premises and write certificate.json");
  add_common(certify, f, true);
  auto* kl = app.add_subcommand("kl-check", "Sample KL inequalities and write kl_report.json");
  add_common(kl, f, false);
  auto* report = app.add_subcommand("report", "Summarize a directory of runs");
  report->add_option("dir", f.dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return klsgd::kExitError;
  }

  klsgd::CommandOptions options;
  options.config = f.config;
  if (!f.out.empty()) options.out = f.out;
  options.threads = f.threads;
  if (!f.seeds.empty()) {
    try {
      options.seeds = klsgd::parse_seeds(f.seeds);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: usage: --seeds: " << e.what() << "\n";
      return klsgd::kExitError;
    }
  }

  if (*run) return klsgd::cmd_run(options, std::cout, std::cerr);
  if (*certify) return klsgd::cmd_certify(options, std::cout, std::cerr);
  if (*kl) return klsgd::cmd_klcheck(options, std::cout, std::cerr);
  return klsgd::cmd_report(f.dir, std::cout, std::cerr);
}

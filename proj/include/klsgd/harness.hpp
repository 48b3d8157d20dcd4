#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "klsgd/certify.hpp"
#include "klsgd/config.hpp"
#include "klsgd/schemes.hpp"

namespace klsgd {

inline constexpr int kExitOk = 0;
// A verdict failed or KL violations were found.
inline constexpr int kExitFail = 1;
// Invalid configuration, usage or I/O.
inline constexpr int kExitError = 2;

struct CommandOptions {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::size_t threads = 1;
};

// Runs every seed of the configuration on a pool of `threads` workers.
// Results are ordered as the seeds.
std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& config,
                                             const std::vector<std::uint64_t>& seeds,
                                             std::size_t threads);

struct CertifyResult {
  CertificateReport report;
  nlohmann::json monitors;
  std::vector<std::string> warnings;
};

CertifyResult certify_experiment(const ExperimentConfig& config);

nlohmann::json klcheck_experiment(const ExperimentConfig& config);

// Groups run_<seed>.csv files by horizon and summarizes their diagnostics.
// `text` receives one line per group.
nlohmann::json report_directory(const std::filesystem::path& dir, std::string& text);

// Commands write failures to `err` as a single "error: ..." line.
int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_certify(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_klcheck(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace klsgd

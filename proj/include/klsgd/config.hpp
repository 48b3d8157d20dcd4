#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "klsgd/coefficients.hpp"
#include "klsgd/problems.hpp"
#include "klsgd/schemes.hpp"
#include "klsgd/sequence.hpp"

namespace klsgd {

// Invalid configuration, anchored at a line of the source file.
// what() reads "<path>:<line>: <message>"; line 0 means no position.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, int line, const std::string& message);

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

struct ProblemConfig {
  std::string id;
  int dimension = 2;
  double beta = 1.0;
  double mu_h = 1.0;
  std::optional<Vector> z0;
  std::optional<Vector> x0;
};

struct OracleConfig {
  std::string kind = "additive_gaussian";
  Schedule sigma = Schedule::zero();
  double b = 1.0;
  Schedule bias = Schedule::zero();
  std::size_t population = 100;
  std::size_t batch = 10;
  double spread = 0.1;
  std::uint64_t seed = 0;
};

struct PreconditionerConfig {
  std::string kind = "identity";
  Schedule mu = Schedule::constant(1.0);
  Schedule nu = Schedule::constant(1.0);
};

struct ProxConfig {
  std::string kind = "exact";
  std::vector<double> curvatures;
  std::vector<double> weights;
  // Defaults to the problem's center for every client.
  std::vector<Vector> centers;
  std::size_t subset = 1;
  double y_radius = 3.0;
  Schedule e = Schedule::zero();
};

struct CertifierConfig {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  // Iterations over which schedule premises are scanned.
  std::size_t horizon = 1000;
  // States for the one-step Monte-Carlo checks; x0 when empty.
  std::vector<Vector> points;
  std::size_t iteration = 0;
  double gamma = 0.5;
  double rho = 0.5;
  double kl_c = 1.0;
  double kl_theta = 0.5;
  double kl_epsilon = 0.2;
  double kl_zeta = 0.1;
  std::size_t kl_samples = 10000;
  double upsilon = 0.25;
  double delta = 0.5;
  // Continuations per state for the Gamma_phi partial sums; 0 skips them.
  std::size_t inner = 0;
};

struct ExperimentConfig {
  std::string path;
  std::string source;
  ProblemConfig problem;
  std::string scheme = "sgd";
  std::size_t horizon = 1000;
  std::vector<std::uint64_t> seeds{0};
  Schedule step = Schedule::constant(0.01);
  Schedule gamma = Schedule::constant(0.1);
  Schedule lambda = Schedule::constant(1.0);
  OracleConfig oracle;
  PreconditionerConfig preconditioner;
  ProxConfig prox;
  std::optional<CertifierConfig> certifier;
  std::string output_dir = "out";
  // First line of each section, for errors raised after parsing.
  int problem_line = 0;
  int scheme_line = 0;
  int oracle_line = 0;
  int preconditioner_line = 0;
  int prox_line = 0;
};

ExperimentConfig parse_config(const std::string& source, const std::string& path = "<config>");
ExperimentConfig load_config(const std::string& path);

// "n" means seeds 0..n-1; "a,b,c" is an explicit list. Seeds must be distinct.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

// Builders rethrow construction failures as ConfigError.
Problem build_problem(const ExperimentConfig& config);
Scheme build_scheme(const ExperimentConfig& config, const Problem& problem);
Vector initial_point(const ExperimentConfig& config, const Problem& problem);

// Descent coefficients implied by the scheme, when its oracles declare them.
struct SchemeCoefficients {
  DescentCoefficients coeffs;
  std::optional<SgdCoefficientInput> sgd;
  std::optional<ProxCoefficientInput> prox_input;
  std::optional<ProxCoefficients> prox;
};

std::optional<SchemeCoefficients> scheme_coefficients(const ExperimentConfig& config,
                                                      const Scheme& scheme,
                                                      const Problem& problem);

}  // namespace klsgd

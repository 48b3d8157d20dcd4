#include "klsgd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "klsgd/diagnostics.hpp"
#include "klsgd/io.hpp"
#include "klsgd/kl.hpp"
#include "klsgd/lyapunov.hpp"
#include "klsgd/text.hpp"

namespace klsgd {

namespace fs = std::filesystem;

std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& config,
                                             const std::vector<std::uint64_t>& seeds,
                                             std::size_t threads) {
  const auto problem = build_problem(config);
  const auto scheme = build_scheme(config, problem);
  const auto x0 = initial_point(config, problem);
  const auto coeffs = scheme_coefficients(config, scheme, problem);
  const DescentCoefficients* c = coeffs ? &coeffs->coeffs : nullptr;

  std::vector<TrajectoryRecord> records(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        records[i] = run_trajectory(scheme, problem, config.horizon, seeds[i], x0, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n = std::max<std::size_t>(1, std::min(threads, seeds.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

namespace {

nlohmann::json vector_json(const Vector& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

std::vector<Vector> certifier_points(const ExperimentConfig& config, const Problem& problem) {
  std::vector<Vector> points = config.certifier->points;
  if (points.empty()) points.push_back(initial_point(config, problem));
  for (const auto& p : points) {
    if (p.size() != problem.dimension()) {
      throw ConfigError(config.path, 0,
                        "'certifier.points' entries must have " +
                            std::to_string(problem.dimension()) + " coordinates");
    }
  }
  return points;
}

nlohmann::json trajectory_monitors(const ExperimentConfig& config, const Scheme& scheme,
                                   const Problem& problem, const DescentCoefficients& coeffs) {
  const auto& cert = *config.certifier;
  const auto seed = config.seeds.front();
  const auto traj =
      run_trajectory(scheme, problem, config.horizon, seed, initial_point(config, problem), &coeffs);
  DiagnosticsOptions options;
  options.kl_epsilon = cert.kl_epsilon;
  options.kl_zeta = cert.kl_zeta;
  const auto diagnostics = convergence_diagnostics(traj, options);
  nlohmann::json out = {{"seed", seed}, {"diagnostics", diagnostics.to_json()}};
  if (traj.diverged) return out;
  const double f_limit = diagnostics.f_limit;
  out["xi_gamma"] = xi_gamma_monitor(traj, coeffs, cert.gamma, f_limit).to_json();
  if (cert.inner > 0) {
    const auto phi = extend_to_infinity(Desingularizer(cert.kl_c, cert.kl_theta, cert.kl_zeta));
    out["gamma_phi"] =
        gamma_phi_partial_sums(traj, scheme, problem, phi, coeffs, cert.inner, cert.seed, f_limit)
            .to_json();
  }
  return out;
}

}  // namespace

CertifyResult certify_experiment(const ExperimentConfig& config) {
  if (!config.certifier) throw ConfigError(config.path, 0, "missing section 'certifier'");
  const auto& cert = *config.certifier;
  const auto problem = build_problem(config);
  const auto scheme = build_scheme(config, problem);
  const auto sc = scheme_coefficients(config, scheme, problem);
  if (!sc) {
    throw ConfigError(config.path, config.oracle_line,
                      "oracle '" + config.oracle.kind + "' declares no error bound for prox_gradient");
  }

  CertifyResult result;
  if (sc->sgd) {
    result.report.append(sgd_premises(*sc->sgd, sc->coeffs, cert.horizon));
  } else {
    result.report.append(prox_premises(*sc->prox_input, *sc->prox, cert.horizon));
    const double limit = 1.0 / problem.split()->convex.curvature;
    for (std::size_t k = 0; k <= cert.horizon; ++k) {
      if (config.gamma(k) >= limit) {
        result.warnings.push_back("gamma_k >= 1/beta_H from k = " + std::to_string(k));
        break;
      }
    }
  }
  result.report.append(check_convergence_premises(sc->coeffs, cert.horizon));

  const auto points = certifier_points(config, problem);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& x = points[i];
    const auto seed = cert.seed + i;
    std::vector<CertificateEntry> entries = {
        mc_certify_descent(scheme, problem, x, cert.iteration, sc->coeffs, cert.samples, seed),
        mc_certify_stepbound(scheme, problem, x, cert.iteration, sc->coeffs, cert.samples, seed)};
    if (const auto* sgd = std::get_if<SgdScheme>(&scheme)) {
      const auto m = empirical_moment_check(sgd->oracle, problem, x, cert.iteration, cert.samples,
                                            seed);
      CertificateEntry entry{"moment_bound", "E||f_k||^2 <= a (F - F*) + b ||grad F||^2 + c",
                             m.verdict, {}};
      entry.evidence.mean = m.mean;
      entry.evidence.se = m.se;
      entry.evidence.bound = m.bound;
      entry.evidence.margin = m.bound - m.mean;
      entries.push_back(entry);
    } else {
      const auto& px = std::get<ProxGradientScheme>(scheme);
      const double gamma = px.gamma(cert.iteration);
      const Vector y = x - gamma * problem.split()->smooth_gradient(x);
      entries.push_back(mc_certify_prox_unbiased(px, y, cert.iteration, cert.samples, seed));
    }
    for (auto& e : entries) {
      e.evidence.extras["point"] = vector_json(x);
      result.report.add(std::move(e));
    }
  }

  try {
    result.monitors = trajectory_monitors(config, scheme, problem, sc->coeffs);
  } catch (const std::exception& e) {
    result.monitors = {{"error", e.what()}};
  }
  return result;
}

nlohmann::json klcheck_experiment(const ExperimentConfig& config) {
  const CertifierConfig cert = config.certifier.value_or(CertifierConfig{});
  const auto problem = build_problem(config);
  const Desingularizer phi(cert.kl_c, cert.kl_theta, cert.kl_zeta);
  const auto report =
      kl_check_uniform(problem, phi, cert.kl_epsilon, cert.kl_zeta, cert.kl_samples, cert.seed);
  std::vector<ComponentKL> per_component(problem.components().size(),
                                         ComponentKL{phi, cert.kl_epsilon, cert.kl_zeta});
  const auto merged = build_extended_uniform(problem, per_component, cert.upsilon, cert.delta,
                                             cert.kl_samples, cert.seed);
  const double margin = report.min_margin();
  return {{"problem", problem.id()},
          {"component_count", problem.components().size()},
          {"verdict", to_string(report.verdict())},
          {"total_violated", report.total_violated()},
          {"min_margin", std::isfinite(margin) ? nlohmann::json(margin) : nlohmann::json(nullptr)},
          {"components", report.to_json()},
          {"merged", merged.to_json()}};
}

nlohmann::json report_directory(const fs::path& dir, std::string& text) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  const std::regex name("run_([0-9]+)\\.csv");
  std::map<std::uint64_t, fs::path> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto file = entry.path().filename().string();
    if (std::regex_match(file, m, name)) runs[std::stoull(m[1])] = entry.path();
  }
  if (runs.empty()) throw std::runtime_error("no run_<seed>.csv files in " + dir.string());

  std::map<std::size_t, std::vector<std::pair<std::uint64_t, DiagnosticsReport>>> groups;
  std::set<std::string> hashes;
  for (const auto& [seed, csv] : runs) {
    auto sidecar_path = csv;
    sidecar_path.replace_extension(".json");
    nlohmann::json sidecar = nlohmann::json::object();
    if (fs::exists(sidecar_path)) sidecar = nlohmann::json::parse(read_file(sidecar_path));
    if (sidecar.contains("config_hash")) hashes.insert(sidecar["config_hash"].get<std::string>());
    const auto record = parse_trajectory(read_file(csv), sidecar);
    if (record.rows.empty()) throw std::runtime_error(csv.string() + " has no rows");
    groups[record.rows.size() - 1].emplace_back(seed, convergence_diagnostics(record));
  }

  nlohmann::json out = {{"config_hashes", hashes}, {"groups", nlohmann::json::array()}};
  std::ostringstream lines;
  for (const auto& [horizon, items] : groups) {
    std::vector<DiagnosticsReport> reports;
    nlohmann::json per_run = nlohmann::json::array();
    for (const auto& [seed, r] : items) {
      reports.push_back(r);
      per_run.push_back({{"seed", seed},
                         {"success", r.success},
                         {"diverged", r.diverged},
                         {"final_dist", r.final_dist},
                         {"final_grad", r.final_grad},
                         {"tail_increment", r.tail_increment},
                         {"f_limit", r.f_limit},
                         {"level_verdict", to_string(r.level.verdict)}});
    }
    const auto summary = summarize(reports);
    out["groups"].push_back({{"horizon", horizon}, {"summary", summary.to_json()}, {"runs", per_run}});
    lines << "horizon " << horizon << ": runs " << summary.runs << ", success fraction "
          << shortest(summary.success_fraction) << ", median final dist "
          << shortest(summary.median_final_dist) << ", median tail increment "
          << shortest(summary.median_tail_increment) << "\n";
  }
  text = lines.str();
  return out;
}

namespace {

struct Loaded {
  ExperimentConfig config;
  std::string hash;
  fs::path out_dir;
};

Loaded load(const CommandOptions& options) {
  Loaded l{load_config(options.config), {}, {}};
  l.hash = fnv1a64_hex(l.config.source);
  if (options.seeds) l.config.seeds = *options.seeds;
  l.out_dir = options.out ? fs::path(*options.out) : fs::path(l.config.output_dir);
  fs::create_directories(l.out_dir);
  return l;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    err << "error: " << message << "\n";
  }
  return kExitError;
}

}  // namespace

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(options);
    const auto problem = build_problem(l.config);
    const bool has_coefficients =
        scheme_coefficients(l.config, build_scheme(l.config, problem), problem).has_value();
    const auto records = run_experiment(l.config, l.config.seeds, options.threads);
    std::size_t diverged = 0;
    for (const auto& r : records) {
      const auto stem = l.out_dir / ("run_" + std::to_string(r.seed));
      auto meta = r.metadata();
      meta["config_hash"] = l.hash;
      meta["coefficients"] = has_coefficients;
      write_atomic(fs::path(stem.string() + ".csv"), trajectory_csv(r));
      write_atomic(fs::path(stem.string() + ".json"), render_json(meta));
      diverged += r.diverged;
    }
    out << "run: " << records.size() << " trajectories written to " << l.out_dir.string();
    if (diverged > 0) out << " (" << diverged << " diverged)";
    out << "\n";
    return kExitOk;
  });
}

int cmd_certify(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(options);
    const auto result = certify_experiment(l.config);
    auto json = result.report.to_json();
    json["config_hash"] = l.hash;
    json["problem"] = l.config.problem.id;
    json["scheme"] = l.config.scheme;
    json["monitors"] = result.monitors;
    json["warnings"] = result.warnings;
    write_atomic(l.out_dir / "certificate.json", render_json(json));
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    const auto fails = result.report.count(Verdict::fail);
    const auto inconclusive = result.report.count(Verdict::inconclusive);
    out << "certify: " << result.report.count(Verdict::pass) << " pass, " << fails << " fail, "
        << inconclusive << " inconclusive\n";
    if (inconclusive > 0) err << "warning: " << inconclusive << " inconclusive verdicts\n";
    return fails > 0 ? kExitFail : kExitOk;
  });
}

int cmd_klcheck(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto l = load(options);
    auto json = klcheck_experiment(l.config);
    json["config_hash"] = l.hash;
    write_atomic(l.out_dir / "kl_report.json", render_json(json));
    const auto violated = json["total_violated"].get<std::size_t>();
    out << "kl-check: " << json["component_count"].get<std::size_t>() << " components, "
        << violated << " violations, verdict " << json["verdict"].get<std::string>() << "\n";
    return violated > 0 ? kExitFail : kExitOk;
  });
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::string text;
    const auto json = report_directory(dir, text);
    write_atomic(dir / "summary.json", render_json(json));
    out << text;
    return kExitOk;
  });
}

}  // namespace klsgd

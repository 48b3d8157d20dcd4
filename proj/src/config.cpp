#include "klsgd/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include <yaml-cpp/yaml.h>

namespace klsgd {

ConfigError::ConfigError(std::string path, int line, const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + message),
      path_(std::move(path)),
      line_(line) {}

namespace {

const std::set<std::string> kProblems = {"quadratic", "double_well_1d", "circle_quartic",
                                         "composite_quartic_quadratic"};

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line < 0 ? 0 : mark.line + 1;
}

class Reader {
 public:
  explicit Reader(std::string path) : path_(std::move(path)) {}

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigError(path_, line, message);
  }
  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    fail(line_of(node), message);
  }

  // Rejects unknown and repeated keys.
  void check_keys(const YAML::Node& map, const std::string& section,
                  const std::set<std::string>& allowed) const {
    if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
    std::set<std::string> seen;
    for (const auto& item : map) {
      const auto key = item.first.as<std::string>();
      if (!allowed.count(key)) fail(item.first, "unknown key '" + section + "." + key + "'");
      if (!seen.insert(key).second) fail(item.first, "duplicate key '" + section + "." + key + "'");
    }
  }

  template <class T>
  T scalar(const YAML::Node& node, const std::string& name) const {
    if (!node.IsScalar()) fail(node, "'" + name + "' must be a scalar");
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, "'" + name + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  double real(const YAML::Node& node, const std::string& name) const {
    const auto v = scalar<double>(node, name);
    if (!std::isfinite(v)) fail(node, "'" + name + "' must be finite");
    return v;
  }

  double positive(const YAML::Node& node, const std::string& name) const {
    const auto v = real(node, name);
    if (!(v > 0.0)) fail(node, "'" + name + "' must be positive");
    return v;
  }

  std::size_t count(const YAML::Node& node, const std::string& name) const {
    const auto text = scalar<std::string>(node, name);
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
      fail(node, "'" + name + "' must be a nonnegative integer");
    }
    return v;
  }

  Schedule schedule(const YAML::Node& node, const std::string& name) const {
    const auto text = scalar<std::string>(node, name);
    Schedule s;
    try {
      s = Schedule::parse(text);
    } catch (const std::invalid_argument& e) {
      fail(node, "'" + name + "': " + e.what());
    }
    if (s.law.c < 0.0 || s.law.q < 0.0) fail(node, "'" + name + "' must be nonnegative");
    return s;
  }

  Vector vector(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence()) fail(node, "'" + name + "' must be a list of numbers");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      v(static_cast<Eigen::Index>(i)) = real(node[i], name);
    }
    return v;
  }

  std::vector<double> reals(const YAML::Node& node, const std::string& name) const {
    const auto v = vector(node, name);
    return {v.data(), v.data() + v.size()};
  }

  std::vector<Vector> vectors(const YAML::Node& node, const std::string& name) const {
    if (!node.IsSequence()) fail(node, "'" + name + "' must be a list of points");
    std::vector<Vector> out;
    for (const auto& item : node) out.push_back(vector(item, name));
    return out;
  }

  std::string choice(const YAML::Node& node, const std::string& name,
                     const std::set<std::string>& options) const {
    const auto v = scalar<std::string>(node, name);
    if (!options.count(v)) fail(node, "unknown " + name + " '" + v + "'");
    return v;
  }

 private:
  std::string path_;
};

void parse_problem(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "problem", {"id", "dimension", "beta", "mu_h", "z0", "x0"});
  cfg.problem_line = line_of(node);
  if (!node["id"]) in.fail(node, "missing key 'problem.id'");
  cfg.problem.id = in.choice(node["id"], "problem.id", kProblems);
  if (node["dimension"]) {
    const auto n = in.count(node["dimension"], "problem.dimension");
    if (n < 1) in.fail(node["dimension"], "'problem.dimension' must be at least 1");
    cfg.problem.dimension = static_cast<int>(n);
  }
  if (node["beta"]) cfg.problem.beta = in.positive(node["beta"], "problem.beta");
  if (node["mu_h"]) cfg.problem.mu_h = in.positive(node["mu_h"], "problem.mu_h");
  if (node["z0"]) cfg.problem.z0 = in.vector(node["z0"], "problem.z0");
  if (node["x0"]) cfg.problem.x0 = in.vector(node["x0"], "problem.x0");
}

void parse_scheme(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "scheme", {"id", "horizon", "seeds", "step", "gamma", "lambda"});
  cfg.scheme_line = line_of(node);
  if (node["id"]) cfg.scheme = in.choice(node["id"], "scheme.id", {"sgd", "prox_gradient"});
  if (node["horizon"]) cfg.horizon = in.count(node["horizon"], "scheme.horizon");
  if (node["seeds"]) {
    const auto& s = node["seeds"];
    try {
      if (s.IsSequence()) {
        std::string joined;
        for (const auto& item : s) {
          joined += (joined.empty() ? "" : ",") + in.scalar<std::string>(item, "scheme.seeds");
        }
        if (joined.empty()) in.fail(s, "'scheme.seeds' must not be empty");
        // A one-element list is a seed, not a count.
        cfg.seeds = s.size() == 1 ? std::vector<std::uint64_t>{in.scalar<std::uint64_t>(s[0], "scheme.seeds")}
                                  : parse_seeds(joined);
      } else {
        cfg.seeds = parse_seeds(in.scalar<std::string>(s, "scheme.seeds"));
      }
    } catch (const std::invalid_argument& e) {
      in.fail(s, std::string("'scheme.seeds': ") + e.what());
    }
  }
  if (node["step"]) cfg.step = in.schedule(node["step"], "scheme.step");
  if (node["gamma"]) cfg.gamma = in.schedule(node["gamma"], "scheme.gamma");
  if (node["lambda"]) cfg.lambda = in.schedule(node["lambda"], "scheme.lambda");
}

void parse_oracle(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "oracle",
                {"kind", "sigma", "b", "bias", "population", "batch", "spread", "seed"});
  cfg.oracle_line = line_of(node);
  auto& o = cfg.oracle;
  if (node["kind"]) {
    o.kind = in.choice(node["kind"], "oracle.kind",
                       {"additive_gaussian", "multiplicative", "minibatch", "biased_decaying"});
  }
  if (node["sigma"]) o.sigma = in.schedule(node["sigma"], "oracle.sigma");
  if (node["b"]) {
    o.b = in.real(node["b"], "oracle.b");
    if (o.b < 1.0) in.fail(node["b"], "'oracle.b' must be at least 1");
  }
  if (node["bias"]) o.bias = in.schedule(node["bias"], "oracle.bias");
  if (node["population"]) o.population = in.count(node["population"], "oracle.population");
  if (node["batch"]) o.batch = in.count(node["batch"], "oracle.batch");
  if (node["spread"]) {
    o.spread = in.real(node["spread"], "oracle.spread");
    if (o.spread < 0.0) in.fail(node["spread"], "'oracle.spread' must be nonnegative");
  }
  if (node["seed"]) o.seed = in.scalar<std::uint64_t>(node["seed"], "oracle.seed");
}

void parse_preconditioner(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "preconditioner", {"kind", "mu", "nu"});
  cfg.preconditioner_line = line_of(node);
  auto& p = cfg.preconditioner;
  if (node["kind"]) {
    p.kind = in.choice(node["kind"], "preconditioner.kind",
                       {"identity", "random_diagonal", "capped_bfgs"});
  }
  if (node["mu"]) p.mu = in.schedule(node["mu"], "preconditioner.mu");
  if (node["nu"]) p.nu = in.schedule(node["nu"], "preconditioner.nu");
}

void parse_prox(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "prox",
                {"kind", "curvatures", "weights", "centers", "subset", "y_radius", "e"});
  cfg.prox_line = line_of(node);
  auto& p = cfg.prox;
  if (node["kind"]) p.kind = in.choice(node["kind"], "prox.kind", {"exact", "federated", "perturbed"});
  if (node["curvatures"]) p.curvatures = in.reals(node["curvatures"], "prox.curvatures");
  if (node["weights"]) p.weights = in.reals(node["weights"], "prox.weights");
  if (node["centers"]) p.centers = in.vectors(node["centers"], "prox.centers");
  if (node["subset"]) p.subset = in.count(node["subset"], "prox.subset");
  if (node["y_radius"]) p.y_radius = in.positive(node["y_radius"], "prox.y_radius");
  if (node["e"]) p.e = in.schedule(node["e"], "prox.e");
}

void parse_certifier(const Reader& in, const YAML::Node& node, ExperimentConfig& cfg) {
  in.check_keys(node, "certifier",
                {"samples", "seed", "horizon", "points", "iteration", "gamma", "rho", "kl_c",
                 "kl_theta", "kl_epsilon", "kl_zeta", "kl_samples", "upsilon", "delta", "inner"});
  CertifierConfig c;
  if (node["samples"]) c.samples = in.count(node["samples"], "certifier.samples");
  if (node["seed"]) c.seed = in.scalar<std::uint64_t>(node["seed"], "certifier.seed");
  if (node["horizon"]) c.horizon = in.count(node["horizon"], "certifier.horizon");
  if (node["points"]) c.points = in.vectors(node["points"], "certifier.points");
  if (node["iteration"]) c.iteration = in.count(node["iteration"], "certifier.iteration");
  if (node["gamma"]) c.gamma = in.positive(node["gamma"], "certifier.gamma");
  if (node["rho"]) c.rho = in.positive(node["rho"], "certifier.rho");
  if (node["kl_c"]) c.kl_c = in.positive(node["kl_c"], "certifier.kl_c");
  if (node["kl_theta"]) c.kl_theta = in.real(node["kl_theta"], "certifier.kl_theta");
  if (node["kl_epsilon"]) c.kl_epsilon = in.positive(node["kl_epsilon"], "certifier.kl_epsilon");
  if (node["kl_zeta"]) c.kl_zeta = in.positive(node["kl_zeta"], "certifier.kl_zeta");
  if (node["kl_samples"]) c.kl_samples = in.count(node["kl_samples"], "certifier.kl_samples");
  if (node["upsilon"]) c.upsilon = in.positive(node["upsilon"], "certifier.upsilon");
  if (node["delta"]) c.delta = in.positive(node["delta"], "certifier.delta");
  if (node["inner"]) c.inner = in.count(node["inner"], "certifier.inner");
  if (c.gamma >= 1.0) in.fail(node["gamma"], "'certifier.gamma' must lie in (0, 1)");
  if (c.rho >= 1.0) in.fail(node["rho"], "'certifier.rho' must lie in (0, 1)");
  if (!(c.kl_theta > 0.0 && c.kl_theta < 1.0)) {
    in.fail(node["kl_theta"], "'certifier.kl_theta' must lie in (0, 1)");
  }
  if (c.upsilon >= 0.5) in.fail(node["upsilon"], "'certifier.upsilon' must lie in (0, 1/2)");
  if (c.delta >= 1.0) in.fail(node["delta"], "'certifier.delta' must lie in (0, 1)");
  if (c.samples < 2) in.fail(node, "'certifier.samples' must be at least 2");
  cfg.certifier = c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& source, const std::string& path) {
  const Reader in(path);
  YAML::Node root;
  try {
    root = YAML::Load(source);
  } catch (const YAML::Exception& e) {
    in.fail(e.mark.line < 0 ? 0 : e.mark.line + 1, e.msg);
  }
  if (!root.IsMap()) in.fail(root, "configuration must be a mapping of sections");
  in.check_keys(root, "",
                {"problem", "scheme", "oracle", "preconditioner", "prox", "certifier", "output"});

  ExperimentConfig cfg;
  cfg.path = path;
  cfg.source = source;
  if (!root["problem"]) in.fail(0, "missing section 'problem'");
  parse_problem(in, root["problem"], cfg);
  if (root["scheme"]) parse_scheme(in, root["scheme"], cfg);
  if (root["oracle"]) parse_oracle(in, root["oracle"], cfg);
  if (root["preconditioner"]) parse_preconditioner(in, root["preconditioner"], cfg);
  if (root["prox"]) parse_prox(in, root["prox"], cfg);
  if (root["certifier"]) parse_certifier(in, root["certifier"], cfg);
  if (root["output"]) {
    const auto& out = root["output"];
    in.check_keys(out, "output", {"dir"});
    if (out["dir"]) cfg.output_dir = in.scalar<std::string>(out["dir"], "output.dir");
  }
  if (cfg.scheme == "prox_gradient" && cfg.problem.id != "composite_quartic_quadratic") {
    in.fail(cfg.scheme_line, "scheme 'prox_gradient' needs a composite problem");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError(path, 0, "cannot open configuration file");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str(), path);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  const auto parse_one = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
      throw std::invalid_argument("invalid seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> seeds;
  if (text.find(',') == std::string::npos) {
    const auto n = parse_one(text);
    if (n == 0) throw std::invalid_argument("seed count must be positive");
    for (std::uint64_t i = 0; i < n; ++i) seeds.push_back(i);
    return seeds;
  }
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    seeds.push_back(parse_one(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  auto sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("seeds must be distinct");
  }
  return seeds;
}

Problem build_problem(const ExperimentConfig& cfg) {
  const auto& p = cfg.problem;
  try {
    if (p.id == "quadratic") return quadratic(p.dimension, p.beta);
    if (p.id == "double_well_1d") return double_well_1d();
    if (p.id == "circle_quartic") return circle_quartic();
    const Vector z0 = p.z0 ? *p.z0 : Vector::Zero(p.dimension);
    return composite_quartic_quadratic(p.dimension, p.mu_h, z0);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path, cfg.problem_line, std::string("problem: ") + e.what());
  }
}

Vector initial_point(const ExperimentConfig& cfg, const Problem& problem) {
  if (!cfg.problem.x0) return problem.default_x0();
  if (cfg.problem.x0->size() != problem.dimension()) {
    throw ConfigError(cfg.path, cfg.problem_line,
                      "'problem.x0' has " + std::to_string(cfg.problem.x0->size()) +
                          " entries, expected " + std::to_string(problem.dimension()));
  }
  return *cfg.problem.x0;
}

namespace {

GradientOracle build_oracle(const ExperimentConfig& cfg, int dimension) {
  const auto& o = cfg.oracle;
  try {
    if (o.kind == "additive_gaussian") return GradientOracle::additive_gaussian(dimension, o.sigma);
    if (o.kind == "multiplicative") return GradientOracle::multiplicative(dimension, o.b);
    if (o.kind == "minibatch") {
      return GradientOracle::minibatch(dimension, o.population, o.batch, o.spread, o.seed);
    }
    return GradientOracle::biased_decaying(dimension, o.sigma, o.bias);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.path, cfg.oracle_line, std::string("oracle: ") + e.what());
  }
}

ProxOracle build_prox(const ExperimentConfig& cfg, const Problem& problem) {
  const auto& p = cfg.prox;
  const auto& h = problem.split()->convex;
  try {
    if (p.kind == "exact") return ProxOracle::exact(h);
    if (p.kind == "perturbed") return ProxOracle::perturbed(h, p.e);
    if (p.curvatures.empty()) throw std::invalid_argument("federated prox needs client curvatures");
    std::vector<ConvexQuadratic> clients;
    for (std::size_t i = 0; i < p.curvatures.size(); ++i) {
      const Vector center = p.centers.empty() ? h.center : p.centers.at(i);
      clients.push_back({p.curvatures[i], center});
    }
    auto weights = p.weights;
    if (weights.empty()) weights.assign(clients.size(), 1.0 / static_cast<double>(clients.size()));
    return ProxOracle::federated(h, clients, weights, p.subset, p.y_radius);
  } catch (const std::exception& e) {
    throw ConfigError(cfg.path, cfg.prox_line, std::string("prox: ") + e.what());
  }
}

}  // namespace

Scheme build_scheme(const ExperimentConfig& cfg, const Problem& problem) {
  auto oracle = build_oracle(cfg, problem.dimension());
  if (cfg.scheme == "sgd") {
    try {
      const auto& pc = cfg.preconditioner;
      auto pre = pc.kind == "identity"          ? Preconditioner::identity()
                 : pc.kind == "random_diagonal" ? Preconditioner::random_diagonal(pc.mu, pc.nu)
                                                : Preconditioner::capped_bfgs(pc.mu, pc.nu);
      return SgdScheme{std::move(oracle), std::move(pre), cfg.step};
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.path, cfg.preconditioner_line,
                        std::string("preconditioner: ") + e.what());
    }
  }
  if (!problem.split()) {
    throw ConfigError(cfg.path, cfg.scheme_line, "scheme 'prox_gradient' needs a composite problem");
  }
  const double lambda0 = cfg.lambda(0);
  if (!(lambda0 > 0.0 && lambda0 <= 1.0) || cfg.lambda.summability() == Summability::yes) {
    throw ConfigError(cfg.path, cfg.scheme_line, "'scheme.lambda' must stay in (0, 1]");
  }
  if (!(cfg.gamma(0) > 0.0)) {
    throw ConfigError(cfg.path, cfg.scheme_line, "'scheme.gamma' must be positive");
  }
  return ProxGradientScheme{std::move(oracle), build_prox(cfg, problem), cfg.gamma, cfg.lambda};
}

std::optional<SchemeCoefficients> scheme_coefficients(const ExperimentConfig& cfg,
                                                      const Scheme& scheme,
                                                      const Problem& problem) {
  if (const auto* sgd = std::get_if<SgdScheme>(&scheme)) {
    SgdCoefficientInput in;
    in.alpha = Sequence(sgd->step);
    in.mu = sgd->preconditioner.mu_sequence();
    in.nu = sgd->preconditioner.nu_sequence();
    in.a = sgd->oracle.a_sequence();
    in.b = sgd->oracle.b_sequence();
    in.c = sgd->oracle.c_sequence();
    in.bias = sgd->oracle.bias_sequence();
    in.beta = problem.beta();
    in.biased = !sgd->oracle.unbiased();
    if (cfg.certifier) in.rho = cfg.certifier->rho;
    SchemeCoefficients out{sgd_coefficients(in), in, std::nullopt, std::nullopt};
    return out;
  }
  const auto& px = std::get<ProxGradientScheme>(scheme);
  if (!px.oracle.declared_errors(0)) return std::nullopt;
  const auto& split = *problem.split();

  Sequence prox_d(Schedule::zero());
  Sequence prox_e(Schedule::zero());
  if (px.prox.kind() == ProxOracle::Kind::perturbed) {
    prox_e = Sequence(cfg.prox.e);
  } else if (px.prox.kind() == ProxOracle::Kind::federated) {
    const auto prox = px.prox;
    const auto gamma = px.gamma;
    const auto at = [prox, gamma](std::size_t k) { return prox.declared_errors(k, gamma(k)); };
    if (gamma.form == Schedule::Form::constant) {
      const auto e0 = at(0);
      prox_d = Sequence(e0.d > 0.0 ? Schedule::constant(e0.d) : Schedule::zero());
      prox_e = Sequence(e0.e > 0.0 ? Schedule::constant(e0.e) : Schedule::zero());
    } else {
      prox_d = Sequence([at](std::size_t k) { return at(k).d; }, Summability::unknown,
                        std::nullopt, "federated d");
      prox_e = Sequence([at](std::size_t k) { return at(k).e; }, Summability::unknown,
                        std::nullopt, "federated e");
    }
  }

  ProxCoefficientInput in;
  in.gamma = Sequence(px.gamma);
  in.lambda = Sequence(px.lambda);
  in.d = max(px.oracle.d_sequence(), prox_d);
  in.e = max(px.oracle.e_sequence(), prox_e);
  in.beta_smooth = split.beta_smooth;
  in.beta_convex = split.convex.curvature;
  auto pc = prox_coefficients(in);
  SchemeCoefficients out{pc.coeffs, std::nullopt, in, pc};
  return out;
}

}  // namespace klsgd

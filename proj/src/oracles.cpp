#include "klsgd/oracles.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace klsgd {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      break;
  }
  return "inconclusive";
}

namespace {

Vector standard_normal(int n, Stream& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

void require_nonnegative(const Schedule& s, const char* what) {
  if (s.law.c < 0.0 || s.law.q < 0.0) {
    throw std::invalid_argument(std::string(what) + " schedule must be nonnegative");
  }
}

// First m entries of a uniformly random permutation of 0..n-1.
std::vector<std::size_t> draw_subset(std::size_t n, std::size_t m, Stream& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(order[i], order[j]);
  }
  order.resize(m);
  return order;
}

}  // namespace

GradientOracle GradientOracle::additive_gaussian(int dimension, Schedule sigma) {
  require_nonnegative(sigma, "noise");
  GradientOracle o;
  o.kind_ = Kind::additive_gaussian;
  o.dimension_ = dimension;
  o.sigma_ = sigma;
  return o;
}

GradientOracle GradientOracle::multiplicative(int dimension, double b) {
  if (!(b >= 1.0)) throw std::invalid_argument("strong growth constant must be at least 1");
  GradientOracle o;
  o.kind_ = Kind::multiplicative;
  o.dimension_ = dimension;
  o.growth_ = b;
  return o;
}

GradientOracle GradientOracle::minibatch(int dimension, std::size_t population, std::size_t batch,
                                         double spread, std::uint64_t seed) {
  if (population < 2) throw std::invalid_argument("minibatch population must be at least 2");
  if (batch < 1 || batch > population) {
    throw std::invalid_argument("batch size must lie in [1, population]");
  }
  if (!(spread >= 0.0)) throw std::invalid_argument("offset spread must be nonnegative");
  GradientOracle o;
  o.kind_ = Kind::minibatch;
  o.dimension_ = dimension;
  o.batch_ = batch;
  Stream rng({seed, 0}, 0, StreamRole::sampling);
  Vector centre = Vector::Zero(dimension);
  for (std::size_t j = 0; j < population; ++j) {
    o.offsets_.push_back(spread * standard_normal(dimension, rng));
    centre += o.offsets_.back();
  }
  centre /= static_cast<double>(population);
  double mean_square = 0.0;
  for (auto& xi : o.offsets_) {
    xi -= centre;
    mean_square += xi.squaredNorm();
  }
  mean_square /= static_cast<double>(population);
  const double n = static_cast<double>(population);
  const double m = static_cast<double>(batch);
  o.batch_variance_ = (n - m) / (m * (n - 1.0)) * mean_square;
  return o;
}

GradientOracle GradientOracle::biased_decaying(int dimension, Schedule sigma, Schedule bias) {
  require_nonnegative(sigma, "noise");
  require_nonnegative(bias, "bias");
  GradientOracle o;
  o.kind_ = Kind::biased_decaying;
  o.dimension_ = dimension;
  o.sigma_ = sigma;
  o.bias_ = bias;
  o.bias_direction_ = Vector::Constant(dimension, 1.0 / std::sqrt(static_cast<double>(dimension)));
  return o;
}

std::string GradientOracle::name() const {
  switch (kind_) {
    case Kind::additive_gaussian:
      return "additive_gaussian";
    case Kind::multiplicative:
      return "multiplicative";
    case Kind::minibatch:
      return "minibatch";
    case Kind::biased_decaying:
      break;
  }
  return "biased_decaying";
}

Vector GradientOracle::sample(const Vector& exact, std::size_t k, Stream& rng) const {
  switch (kind_) {
    case Kind::additive_gaussian: {
      const double s = sigma_(k);
      if (s == 0.0) return exact;
      return exact + s * standard_normal(dimension_, rng);
    }
    case Kind::multiplicative: {
      const double spread = std::sqrt(growth_ - 1.0);
      const double scale = (rng.next_u32() & 1U) ? 1.0 + spread : 1.0 - spread;
      return scale * exact;
    }
    case Kind::minibatch: {
      Vector noise = Vector::Zero(dimension_);
      for (std::size_t j : draw_subset(offsets_.size(), batch_, rng)) noise += offsets_[j];
      return exact + noise / static_cast<double>(batch_);
    }
    case Kind::biased_decaying:
      break;
  }
  const double s = sigma_(k);
  Vector out = exact + bias_(k) * bias_direction_;
  if (s != 0.0) out += s * standard_normal(dimension_, rng);
  return out;
}

Vector GradientOracle::mean(const Vector& exact, std::size_t k) const {
  if (kind_ == Kind::biased_decaying) return exact + bias_(k) * bias_direction_;
  return exact;
}

MomentCoefficients GradientOracle::declared_moments(std::size_t k) const {
  return {a_sequence()(k), b_sequence()(k), c_sequence()(k)};
}

std::optional<ErrorCoefficients> GradientOracle::declared_errors(std::size_t k) const {
  if (kind_ == Kind::multiplicative || kind_ == Kind::biased_decaying) return std::nullopt;
  return ErrorCoefficients{d_sequence()(k), e_sequence()(k)};
}

double GradientOracle::bias_norm(std::size_t k) const {
  return kind_ == Kind::biased_decaying ? bias_(k) : 0.0;
}

Sequence GradientOracle::a_sequence() const { return Sequence(Schedule::zero()); }

Sequence GradientOracle::b_sequence() const {
  switch (kind_) {
    case Kind::multiplicative:
      return Sequence(Schedule::constant(growth_));
    case Kind::biased_decaying:
      // ||g + bias||^2 <= 2||g||^2 + 2 bias^2
      return Sequence(Schedule::constant(2.0));
    default:
      return Sequence(Schedule::constant(1.0));
  }
}

Sequence GradientOracle::c_sequence() const {
  const double n = static_cast<double>(dimension_);
  const Sequence sigma(sigma_);
  switch (kind_) {
    case Kind::additive_gaussian:
      return n * (sigma * sigma);
    case Kind::multiplicative:
      return Sequence(Schedule::zero());
    case Kind::minibatch:
      return Sequence(Schedule::constant(batch_variance_));
    case Kind::biased_decaying:
      break;
  }
  const Sequence bias(bias_);
  return 2.0 * (bias * bias) + n * (sigma * sigma);
}

Sequence GradientOracle::bias_sequence() const {
  return kind_ == Kind::biased_decaying ? Sequence(bias_) : Sequence(Schedule::zero());
}

Sequence GradientOracle::d_sequence() const { return Sequence(Schedule::zero()); }

Sequence GradientOracle::e_sequence() const {
  switch (kind_) {
    case Kind::additive_gaussian:
      return static_cast<double>(dimension_) * (Sequence(sigma_) * Sequence(sigma_));
    case Kind::minibatch:
      return Sequence(Schedule::constant(batch_variance_));
    default:
      throw std::logic_error(name() + " oracle has no gradient error bound");
  }
}

MomentReport empirical_moment_check(const GradientOracle& oracle, const Problem& problem,
                                    const Vector& x, std::size_t k, std::size_t samples,
                                    std::uint64_t seed, std::optional<MomentCoefficients> declared) {
  if (samples < 1000) throw std::invalid_argument("moment check needs at least 1000 samples");
  const MomentCoefficients m = declared.value_or(oracle.declared_moments(k));
  const Vector g = problem.gradient(x);
  MomentReport report;
  report.bound = m.a * (problem.evaluate(x) - problem.f_star()) + m.b * g.squaredNorm() + m.c;
  RunningStats stats;
  for (std::size_t j = 0; j < samples; ++j) {
    Stream rng({seed, j}, k, StreamRole::gradient);
    stats.add(oracle.sample(g, k, rng).squaredNorm());
  }
  report.mean = stats.mean();
  report.se = stats.se();
  const double tolerance = 1e-12 * std::max(1.0, std::abs(report.bound));
  report.verdict = report.mean - kStandardErrors * report.se <= report.bound + tolerance
                       ? Verdict::pass
                       : Verdict::fail;
  return report;
}

Preconditioner::Preconditioner(Kind kind, Schedule mu, Schedule nu)
    : kind_(kind), mu_(mu), nu_(nu) {
  require_nonnegative(mu_, "spectrum lower bound");
  for (std::size_t k = 0; k <= 10000; ++k) {
    if (mu_(k) > nu_(k)) {
      throw std::invalid_argument("spectrum lower bound exceeds upper bound at k = " +
                                  std::to_string(k));
    }
  }
  if (!(mu_(0) > 0.0)) throw std::invalid_argument("spectrum lower bound must be positive");
}

Preconditioner Preconditioner::identity() {
  return {Kind::identity, Schedule::constant(1.0), Schedule::constant(1.0)};
}

Preconditioner Preconditioner::random_diagonal(Schedule mu, Schedule nu) {
  return {Kind::random_diagonal, mu, nu};
}

Preconditioner Preconditioner::capped_bfgs(Schedule mu, Schedule nu) {
  return {Kind::capped_bfgs, mu, nu};
}

std::string Preconditioner::name() const {
  switch (kind_) {
    case Kind::identity:
      return "identity";
    case Kind::random_diagonal:
      return "random_diagonal";
    case Kind::capped_bfgs:
      break;
  }
  return "capped_bfgs";
}

Matrix Preconditioner::sample(const Vector& x, std::size_t k, Stream& rng) const {
  const auto n = x.size();
  const double lo = mu_(k);
  const double hi = nu_(k);
  if (lo > hi) throw std::invalid_argument("spectrum lower bound exceeds upper bound");
  switch (kind_) {
    case Kind::identity:
      return Matrix::Identity(n, n);
    case Kind::random_diagonal: {
      Vector diagonal(n);
      for (Eigen::Index i = 0; i < n; ++i) diagonal[i] = rng.uniform(lo, hi);
      return diagonal.asDiagonal();
    }
    case Kind::capped_bfgs:
      break;
  }
  const Vector step = standard_normal(static_cast<int>(n), rng);
  Vector curvature(n);
  for (Eigen::Index i = 0; i < n; ++i) curvature[i] = rng.uniform(0.5, 2.0);
  const Vector change = curvature.cwiseProduct(step);
  const double rho = 1.0 / change.dot(step);
  const Matrix id = Matrix::Identity(n, n);
  const Matrix left = id - rho * step * change.transpose();
  Matrix h = left * left.transpose() + rho * step * step.transpose();
  h = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const Vector clipped = eig.eigenvalues().cwiseMax(lo).cwiseMin(hi);
  Matrix out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::optional<double> Preconditioner::deterministic_scale(std::size_t k) const {
  if (kind_ == Kind::identity) return 1.0;
  if (kind_ == Kind::random_diagonal && mu_(k) == nu_(k)) return mu_(k);
  return std::nullopt;
}

Sequence Preconditioner::mu_sequence() const { return Sequence(mu_); }
Sequence Preconditioner::nu_sequence() const { return Sequence(nu_); }

ProxOracle ProxOracle::exact(ConvexQuadratic h) {
  ProxOracle p;
  p.kind_ = Kind::exact;
  p.h_ = std::move(h);
  return p;
}

ProxOracle ProxOracle::federated(ConvexQuadratic h, std::vector<ConvexQuadratic> clients,
                                 std::vector<double> weights, std::size_t subset,
                                 double y_radius) {
  if (clients.empty() || clients.size() != weights.size()) {
    throw std::invalid_argument("need one weight per client");
  }
  if (clients.size() > 20) throw std::invalid_argument("at most 20 clients are supported");
  if (subset == 0 || subset > clients.size()) {
    throw std::invalid_argument("subset size must lie in [1, number of clients]");
  }
  double curvature = 0.0;
  Vector moment = Vector::Zero(h.center.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("client weights must be positive");
    if (!(clients[i].curvature > 0.0)) throw std::invalid_argument("client curvature must be positive");
    if (clients[i].center.size() != h.center.size()) {
      throw std::invalid_argument("client center has the wrong dimension");
    }
    curvature += weights[i] * clients[i].curvature;
    moment += weights[i] * clients[i].curvature * clients[i].center;
  }
  if (std::abs(curvature - h.curvature) > 1e-9 * std::max(1.0, h.curvature) ||
      (moment - h.curvature * h.center).norm() > 1e-9 * std::max(1.0, moment.norm())) {
    throw std::invalid_argument("weighted clients do not sum to the problem's convex part");
  }
  ProxOracle p;
  p.kind_ = Kind::federated;
  p.h_ = std::move(h);
  p.clients_ = std::move(clients);
  p.weights_ = std::move(weights);
  p.subset_ = subset;
  p.y_radius_ = y_radius;
  return p;
}

ProxOracle ProxOracle::perturbed(ConvexQuadratic h, Schedule e) {
  require_nonnegative(e, "prox error");
  ProxOracle p;
  p.kind_ = Kind::perturbed;
  p.h_ = std::move(h);
  p.e_ = e;
  return p;
}

std::string ProxOracle::name() const {
  switch (kind_) {
    case Kind::exact:
      return "exact";
    case Kind::federated:
      return "federated";
    case Kind::perturbed:
      break;
  }
  return "perturbed";
}

Vector ProxOracle::subset_prox(const std::vector<std::size_t>& s, const Vector& y,
                               double gamma) const {
  const double scale = static_cast<double>(clients_.size()) / static_cast<double>(subset_);
  Vector out = Vector::Zero(y.size());
  for (std::size_t i : s) out += weights_[i] * clients_[i].prox(y, gamma);
  return scale * out;
}

std::vector<std::vector<std::size_t>> ProxOracle::subsets() const {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = clients_.size();
  for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != subset_) continue;
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1U << i)) s.push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

Vector ProxOracle::sample(const Vector& y, double gamma, std::size_t k, Stream& rng) const {
  switch (kind_) {
    case Kind::exact:
      return h_.prox(y, gamma);
    case Kind::federated:
      return subset_prox(draw_subset(clients_.size(), subset_, rng), y, gamma);
    case Kind::perturbed:
      break;
  }
  const double variance = e_(k) / static_cast<double>(y.size());
  Vector out = h_.prox(y, gamma);
  if (variance > 0.0) out += std::sqrt(variance) * standard_normal(static_cast<int>(y.size()), rng);
  return out;
}

Vector ProxOracle::mean(const Vector& y, double gamma) const {
  if (kind_ != Kind::federated) return h_.prox(y, gamma);
  const auto all = subsets();
  Vector total = Vector::Zero(y.size());
  for (const auto& s : all) total += subset_prox(s, y, gamma);
  return total / static_cast<double>(all.size());
}

bool ProxOracle::unbiased(double gamma) const {
  if (kind_ != Kind::federated) return true;
  // The mean and the exact prox are affine in y; compare at 0 and unit vectors.
  const auto n = h_.center.size();
  Vector y = Vector::Zero(n);
  const double scale = std::max(1.0, h_.center.norm());
  if ((mean(y, gamma) - h_.prox(y, gamma)).norm() > 1e-12 * scale) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    y.setZero();
    y[i] = 1.0;
    if ((mean(y, gamma) - h_.prox(y, gamma)).norm() > 1e-12 * scale) return false;
  }
  return true;
}

double ProxOracle::error_second_moment(const Vector& y, double gamma, std::size_t k) const {
  switch (kind_) {
    case Kind::exact:
      return 0.0;
    case Kind::perturbed:
      return e_(k);
    case Kind::federated:
      break;
  }
  const auto all = subsets();
  const Vector target = h_.prox(y, gamma);
  double total = 0.0;
  for (const auto& s : all) total += (subset_prox(s, y, gamma) - target).squaredNorm();
  return total / static_cast<double>(all.size());
}

ErrorCoefficients ProxOracle::declared_errors(std::size_t k, double gamma) const {
  switch (kind_) {
    case Kind::exact:
      return {0.0, 0.0};
    case Kind::perturbed:
      return {0.0, e_(k)};
    case Kind::federated:
      break;
  }
  // The error is affine in y with an isotropic linear part, so its second
  // moment is a convex quadratic separable across coordinates; the worst case
  // over the box sits at a corner chosen coordinate by coordinate.
  const auto n = h_.center.size();
  const auto all = subsets();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best_corner = 0.0;
    for (double sign : {-1.0, 1.0}) {
      Vector y = Vector::Zero(n);
      y[i] = sign * y_radius_;
      const Vector target = h_.prox(y, gamma);
      double second = 0.0;
      for (const auto& s : all) {
        const double dev = subset_prox(s, y, gamma)[i] - target[i];
        second += dev * dev;
      }
      best_corner = std::max(best_corner, second / static_cast<double>(all.size()));
    }
    worst += best_corner;
  }
  return {0.0, worst};
}

}  // namespace klsgd

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace klsgd {

enum class Summability { yes, no, unknown };

const char* to_string(Summability s);

// c * (k+1)^(-p) * q^k. Covers constant (p=0,q=1), power (q=1),
// geometric (p=0) and the zero sequence (c=0).
struct PowerLaw {
  double c = 0.0;
  double p = 0.0;
  double q = 1.0;

  double operator()(std::size_t k) const;
  Summability summability() const;
  // Limit as k -> infinity; nullopt when it does not exist or is infinite.
  std::optional<double> limit() const;
};

// A deterministic schedule in one of the named closed forms.
struct Schedule {
  enum class Form { constant, power, geometric, zero };
  Form form = Form::zero;
  PowerLaw law;

  static Schedule constant(double c);
  static Schedule power(double c, double p);
  static Schedule geometric(double c, double q);
  static Schedule zero();
  // Parses "constant(c)", "power(c,p)", "geometric(c,q)", "zero" or a bare
  // number (treated as constant). Throws std::invalid_argument.
  static Schedule parse(const std::string& text);

  double operator()(std::size_t k) const { return law(k); }
  Summability summability() const { return law.summability(); }
  std::string to_string() const;
};

// A real sequence with whatever symbolic metadata could be propagated
// through its construction. Metadata is conservative: unknown is always
// a valid answer.
class Sequence {
 public:
  Sequence() = default;
  Sequence(PowerLaw law);
  Sequence(const Schedule& schedule);
  Sequence(std::function<double(std::size_t)> eval, Summability summable,
           std::optional<double> limit, std::string description);

  double operator()(std::size_t k) const { return eval_(k); }
  Summability summability() const { return summable_; }
  std::optional<double> limit() const { return limit_; }
  const std::optional<PowerLaw>& closed_form() const { return closed_; }
  const std::string& description() const { return description_; }

 private:
  std::function<double(std::size_t)> eval_ = [](std::size_t) { return 0.0; };
  Summability summable_ = Summability::yes;
  std::optional<double> limit_ = 0.0;
  std::optional<PowerLaw> closed_ = PowerLaw{};
  std::string description_ = "zero";
};

// Arithmetic on nonnegative sequences, propagating closed forms,
// summability and limits where the rules are sound.
Sequence operator*(const Sequence& a, const Sequence& b);
Sequence operator+(const Sequence& a, const Sequence& b);
Sequence operator-(const Sequence& a, const Sequence& b);
Sequence operator*(double s, const Sequence& a);
Sequence sqrt(const Sequence& a);
Sequence reciprocal(const Sequence& a);
Sequence max(const Sequence& a, const Sequence& b);

}  // namespace klsgd

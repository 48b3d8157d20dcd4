#include "klsgd/sequence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "klsgd/text.hpp"

namespace klsgd {

std::string shortest(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, result.ptr);
}

std::string full_precision(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const char* to_string(Summability s) {
  switch (s) {
    case Summability::yes:
      return "yes";
    case Summability::no:
      return "no";
    case Summability::unknown:
      break;
  }
  return "unknown";
}

double PowerLaw::operator()(std::size_t k) const {
  if (c == 0.0) return 0.0;
  const double kk = static_cast<double>(k);
  double value = c;
  if (p != 0.0) value *= std::pow(kk + 1.0, -p);
  if (q != 1.0) value *= std::pow(q, kk);
  return value;
}

Summability PowerLaw::summability() const {
  if (c == 0.0 || std::abs(q) < 1.0) return Summability::yes;
  if (std::abs(q) == 1.0) return p > 1.0 ? Summability::yes : Summability::no;
  return Summability::no;
}

std::optional<double> PowerLaw::limit() const {
  if (c == 0.0 || std::abs(q) < 1.0) return 0.0;
  if (std::abs(q) > 1.0 || p < 0.0) return std::nullopt;
  if (p > 0.0) return 0.0;
  if (q == 1.0) return c;
  return std::nullopt;
}

Schedule Schedule::constant(double c) { return {Form::constant, {c, 0.0, 1.0}}; }
Schedule Schedule::power(double c, double p) { return {Form::power, {c, p, 1.0}}; }
Schedule Schedule::geometric(double c, double q) { return {Form::geometric, {c, 0.0, q}}; }
Schedule Schedule::zero() { return {Form::zero, {0.0, 0.0, 1.0}}; }

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto result = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || result.ec != std::errc() || result.ptr != t.data() + t.size()) {
    throw std::invalid_argument("bad number '" + t + "' in schedule '" + context + "'");
  }
  return value;
}

}  // namespace

Schedule Schedule::parse(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "zero") return zero();
  const auto open = text.find('(');
  if (open == std::string::npos) return constant(parse_number(text, text));
  if (text.back() != ')') throw std::invalid_argument("unterminated schedule '" + text + "'");
  const std::string name = trim(text.substr(0, open));
  std::vector<double> args;
  std::string inner = text.substr(open + 1, text.size() - open - 2);
  std::size_t start = 0;
  while (true) {
    const auto comma = inner.find(',', start);
    args.push_back(parse_number(inner.substr(start, comma - start), text));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (name == "constant" && args.size() == 1) return constant(args[0]);
  if (name == "power" && args.size() == 2) return power(args[0], args[1]);
  if (name == "geometric" && args.size() == 2) return geometric(args[0], args[1]);
  throw std::invalid_argument("unknown schedule '" + text + "'");
}

std::string Schedule::to_string() const {
  switch (form) {
    case Form::constant:
      return "constant(" + shortest(law.c) + ")";
    case Form::power:
      return "power(" + shortest(law.c) + "," + shortest(law.p) + ")";
    case Form::geometric:
      return "geometric(" + shortest(law.c) + "," + shortest(law.q) + ")";
    case Form::zero:
      break;
  }
  return "zero";
}

Sequence::Sequence(PowerLaw law)
    : eval_([law](std::size_t k) { return law(k); }),
      summable_(law.summability()),
      limit_(law.limit()),
      closed_(law),
      description_("power_law(" + shortest(law.c) + "," + shortest(law.p) + "," + shortest(law.q) +
                   ")") {}

Sequence::Sequence(const Schedule& schedule) : Sequence(schedule.law) {
  description_ = schedule.to_string();
}

Sequence::Sequence(std::function<double(std::size_t)> eval, Summability summable,
                   std::optional<double> limit, std::string description)
    : eval_(std::move(eval)),
      summable_(summable),
      limit_(limit),
      closed_(std::nullopt),
      description_(std::move(description)) {}

namespace {

bool is_zero(const Sequence& s) { return s.closed_form() && s.closed_form()->c == 0.0; }

bool same_shape(const PowerLaw& a, const PowerLaw& b) { return a.p == b.p && a.q == b.q; }

std::optional<double> combine(std::optional<double> a, std::optional<double> b, auto op) {
  if (!a || !b) return std::nullopt;
  return op(*a, *b);
}

}  // namespace

Sequence operator*(const Sequence& a, const Sequence& b) {
  if (a.closed_form() && b.closed_form()) {
    const PowerLaw& x = *a.closed_form();
    const PowerLaw& y = *b.closed_form();
    return Sequence(PowerLaw{x.c * y.c, x.p + y.p, x.q * y.q});
  }
  if (is_zero(a) || is_zero(b)) return Sequence(PowerLaw{});
  Summability summable = Summability::unknown;
  const auto la = a.limit();
  const auto lb = b.limit();
  if ((a.summability() == Summability::yes && lb) || (b.summability() == Summability::yes && la)) {
    summable = Summability::yes;
  } else if ((a.summability() == Summability::no && lb && *lb > 0.0) ||
             (b.summability() == Summability::no && la && *la > 0.0)) {
    summable = Summability::no;
  }
  return Sequence([a, b](std::size_t k) { return a(k) * b(k); }, summable,
                  combine(la, lb, [](double x, double y) { return x * y; }),
                  "(" + a.description() + ")*(" + b.description() + ")");
}

Sequence operator+(const Sequence& a, const Sequence& b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  const std::string description = a.description() + "+" + b.description();
  if (a.closed_form() && b.closed_form() && same_shape(*a.closed_form(), *b.closed_form())) {
    PowerLaw law = *a.closed_form();
    law.c += b.closed_form()->c;
    return Sequence(law);
  }
  Summability summable = Summability::unknown;
  if (a.summability() == Summability::yes && b.summability() == Summability::yes) {
    summable = Summability::yes;
  } else if (a.summability() == Summability::no || b.summability() == Summability::no) {
    summable = Summability::no;
  }
  return Sequence([a, b](std::size_t k) { return a(k) + b(k); }, summable,
                  combine(a.limit(), b.limit(), [](double x, double y) { return x + y; }),
                  description);
}

Sequence operator-(const Sequence& a, const Sequence& b) {
  if (is_zero(b)) return a;
  const std::string description = a.description() + "-(" + b.description() + ")";
  if (a.closed_form() && b.closed_form() && same_shape(*a.closed_form(), *b.closed_form())) {
    PowerLaw law = *a.closed_form();
    law.c -= b.closed_form()->c;
    return Sequence(law);
  }
  const auto limit = combine(a.limit(), b.limit(), [](double x, double y) { return x - y; });
  Summability summable = Summability::unknown;
  if (limit && *limit != 0.0) {
    summable = Summability::no;
  } else if (a.summability() == Summability::yes && b.summability() == Summability::yes) {
    summable = Summability::yes;
  }
  return Sequence([a, b](std::size_t k) { return a(k) - b(k); }, summable, limit, description);
}

Sequence operator*(double s, const Sequence& a) {
  if (a.closed_form()) {
    PowerLaw law = *a.closed_form();
    law.c *= s;
    return Sequence(law);
  }
  if (s == 0.0) return Sequence(PowerLaw{});
  std::optional<double> limit;
  if (a.limit()) limit = s * *a.limit();
  return Sequence([a, s](std::size_t k) { return s * a(k); }, a.summability(), limit,
                  shortest(s) + "*(" + a.description() + ")");
}

Sequence sqrt(const Sequence& a) {
  if (a.closed_form() && a.closed_form()->c >= 0.0 && a.closed_form()->q >= 0.0) {
    const PowerLaw& x = *a.closed_form();
    return Sequence(PowerLaw{std::sqrt(x.c), x.p / 2.0, std::sqrt(x.q)});
  }
  std::optional<double> limit;
  if (a.limit() && *a.limit() >= 0.0) limit = std::sqrt(*a.limit());
  const Summability summable =
      limit && *limit > 0.0 ? Summability::no : Summability::unknown;
  return Sequence([a](std::size_t k) { return std::sqrt(a(k)); }, summable, limit,
                  "sqrt(" + a.description() + ")");
}

Sequence reciprocal(const Sequence& a) {
  if (a.closed_form() && a.closed_form()->c != 0.0 && a.closed_form()->q > 0.0) {
    const PowerLaw& x = *a.closed_form();
    return Sequence(PowerLaw{1.0 / x.c, -x.p, 1.0 / x.q});
  }
  std::optional<double> limit;
  if (a.limit() && *a.limit() != 0.0) limit = 1.0 / *a.limit();
  const Summability summable =
      limit && *limit > 0.0 ? Summability::no : Summability::unknown;
  return Sequence([a](std::size_t k) { return 1.0 / a(k); }, summable, limit,
                  "1/(" + a.description() + ")");
}

Sequence max(const Sequence& a, const Sequence& b) {
  if (a.closed_form() && b.closed_form() && same_shape(*a.closed_form(), *b.closed_form())) {
    PowerLaw law = *a.closed_form();
    law.c = std::max(law.c, b.closed_form()->c);
    return Sequence(law);
  }
  Summability summable = Summability::unknown;
  if (a.summability() == Summability::yes && b.summability() == Summability::yes) {
    summable = Summability::yes;
  } else if (a.summability() == Summability::no || b.summability() == Summability::no) {
    summable = Summability::no;
  }
  return Sequence([a, b](std::size_t k) { return std::max(a(k), b(k)); }, summable,
                  combine(a.limit(), b.limit(), [](double x, double y) { return std::max(x, y); }),
                  "max(" + a.description() + "," + b.description() + ")");
}

}  // namespace klsgd

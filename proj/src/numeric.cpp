#include "numlex/numeric.hpp"

#include <cmath>
#include <cstdlib>

#include "numlex/errors.hpp"

namespace numlex {

NumericValue parse_value(const std::string& text) {
  auto spans = recognize_numbers(text);
  if (spans.size() != 1 || spans[0].text != text)
    throw MalformedNumber("not a recognized number string: '" + text + "'");
  return parse_value(spans[0]);
}

NumericValue parse_value(const NumberSpan& span) {
  std::string cleaned;
  cleaned.reserve(span.text.size());
  bool is_percent = false;
  for (char c : span.text) {
    if (c == ',') continue;
    if (c == '%') {
      is_percent = true;
      continue;
    }
    cleaned.push_back(c);
  }
  char* end = nullptr;
  double v = std::strtod(cleaned.c_str(), &end);
  if (end != cleaned.c_str() + cleaned.size())
    throw MalformedNumber("unparseable number string: '" + span.text + "'");
  if (is_percent) v *= 0.01;
  if (!std::isfinite(v)) throw MalformedNumber("number overflows double: '" + span.text + "'");
  if (v == 0.0) v = 0.0;  // collapse -0
  return NumericValue{v, is_percent, span.text};
}

SigExp decompose(double value) {
  double av = std::fabs(value);
  if (av == 0.0) return SigExp{0.0, 0};
  int e = static_cast<int>(std::floor(std::log10(av)));
  double sig = av / std::pow(10.0, e);
  // log10 rounding can leave sig off by one decade at boundaries.
  while (sig >= 10.0) {
    sig /= 10.0;
    ++e;
  }
  while (sig < 1.0) {
    sig *= 10.0;
    --e;
  }
  return SigExp{sig, e};
}

double reconstruct(const SigExp& se) { return se.significand * std::pow(10.0, se.exponent); }

RegressionTarget regression_target(double value, double eps) {
  return RegressionTarget{std::log(eps + std::fabs(value)), sgn(value)};
}

RegressionTarget regression_target(const NumericValue& v, double eps) {
  return regression_target(v.value, eps);
}

}  // namespace numlex

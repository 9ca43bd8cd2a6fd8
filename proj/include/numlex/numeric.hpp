#pragma once

#include <string>

#include "numlex/numtok.hpp"

namespace numlex {

struct NumericValue {
  double value = 0.0;  // dimensionless; percent scaling already applied
  bool is_percent = false;
  std::string raw;
};

// Normalized scientific decomposition: |v| = significand * 10^exponent with
// significand in [1,10), or (0,0) for zero.
struct SigExp {
  double significand = 0.0;
  int exponent = 0;
  bool operator==(const SigExp&) const = default;
};

struct RegressionTarget {
  double log_abs = 0.0;  // ln(eps + |v|)
  int sign = 0;          // sgn(v) in {-1, 0, +1}
};

// String-to-value semantics: commas stripped, '%' scales by 0.01, sign
// applied, signed zero collapsed to 0.
NumericValue parse_value(const NumberSpan& span);
NumericValue parse_value(const std::string& text);

SigExp decompose(double value);
inline SigExp decompose(const NumericValue& v) { return decompose(v.value); }

double reconstruct(const SigExp& se);

RegressionTarget regression_target(const NumericValue& v, double eps = 1e-6);
RegressionTarget regression_target(double value, double eps = 1e-6);

inline int sgn(double v) { return (v > 0) - (v < 0); }

}  // namespace numlex

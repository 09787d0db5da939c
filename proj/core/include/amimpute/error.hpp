#pragma once

#include <stdexcept>
#include <string>

namespace amimpute {

// Precondition on an argument was violated (bad id, size mismatch, n > N, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input file or missing column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization failure that survived the ridge fallback, or a GCV denominator <= 0.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too little data for a spline basis or an additive fit. Callers fall back to simpler imputations.
class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoRespondentsError : public std::runtime_error {
 public:
  NoRespondentsError() : std::runtime_error("no respondents in sample") {}
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amimpute

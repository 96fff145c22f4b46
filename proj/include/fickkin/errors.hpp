#pragma once

#include <stdexcept>
#include <string>

namespace fickkin {

enum class ErrorKind {
  Domain,      // argument outside the mathematical domain (n_i <= 0, F < 0, ...)
  Config,      // malformed or inconsistent configuration
  Dimension,   // array shape mismatch
  Structural,  // a structural property of the model is violated
  Numerical    // blow-up, instability, singular solve
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error domain_error(const std::string& s) { return Error(ErrorKind::Domain, s); }
inline Error config_error(const std::string& s) { return Error(ErrorKind::Config, s); }
inline Error dimension_error(const std::string& s) { return Error(ErrorKind::Dimension, s); }
inline Error structural_error(const std::string& s) { return Error(ErrorKind::Structural, s); }
inline Error numerical_error(const std::string& s) { return Error(ErrorKind::Numerical, s); }

// Process exit code for the CLI.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
      return 2;
    case ErrorKind::Structural:
    case ErrorKind::Dimension:
      return 3;
    case ErrorKind::Numerical:
      return 4;
  }
  return 1;
}

}  // namespace fickkin

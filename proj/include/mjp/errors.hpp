#ifndef MJP_ERRORS_HPP
#define MJP_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace mjp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time or parameter outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A state index outside the state space.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A kernel, model or policy that violates its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or unusable configuration (grids, majorants, tolerances).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `where` names the offending field.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// The forward equation was requested on a set whose exit rates are not
/// bounded; `witness` is the label of a state with unbounded rate.
class GuardError : public Error {
 public:
  GuardError(const std::string& witness, const std::string& what)
      : Error(what), witness_(witness) {}
  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

/// A numerical property that must hold by construction was violated.
class PropertyFailure : public Error {
 public:
  using Error::Error;
};

/// Missing intermediate rows for a Chapman-Kolmogorov check.
class MissingRowsError : public Error {
 public:
  MissingRowsError(std::vector<long> required, const std::string& what)
      : Error(what), required_(std::move(required)) {}
  const std::vector<long>& required() const noexcept { return required_; }

 private:
  std::vector<long> required_;
};

}  // namespace mjp

#endif  // MJP_ERRORS_HPP

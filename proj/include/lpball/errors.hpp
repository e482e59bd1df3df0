#ifndef LPBALL_ERRORS_HPP
#define LPBALL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lpball {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested quantity degenerates for these parameters (e.g. an MDP at p = q).
class DegenerateError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A numerical procedure failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment / command-line configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal invariant was violated (e.g. a variance came out clearly negative).
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

template <class Error = DomainError>
inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace detail
}  // namespace lpball

#endif  // LPBALL_ERRORS_HPP

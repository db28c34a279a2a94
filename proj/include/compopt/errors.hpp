#ifndef COMPOPT_ERRORS_HPP
#define COMPOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace compopt {

/// Bad argument or inconsistent configuration (dimension mismatch, invalid
/// batch size, malformed problem spec, ...).
class ArgumentError : public std::runtime_error {
 public:
  explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterate left the finite range during a solver run. Carries the epoch
/// and inner iteration at which the guard tripped.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long epoch, long iter)
      : std::runtime_error(what), epoch(epoch), iter(iter) {}
  long epoch;
  long iter;
};

}  // namespace compopt

#endif  // COMPOPT_ERRORS_HPP

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetform {

enum class ErrorKind {
  CoincidentAgents,
  InvalidGraph,
  SchemaError,
  ValidationError,
  NotAnEquilibrium,
  OverConstrained,
  SingularCollinear,
  CollinearDesiredPlacement,
  PreconditionViolated,
  InvalidAnchors,
  CoincidenceDuringSim,
  NonFinite,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers switch on kind().
class FormationError : public std::runtime_error {
 public:
  FormationError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hetform

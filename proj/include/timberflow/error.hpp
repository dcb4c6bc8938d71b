#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace timberflow {

// Malformed or inconsistent input (bad rows, dangling references, bad flags).
// The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that describes an unsolvable or rejected problem.
// The CLI maps these to exit code 1.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what, std::string code = "domain_error")
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Lower bounds that no flow can satisfy. Carries the arithmetic that failed.
class InfeasibleError : public DomainError {
 public:
  InfeasibleError(const std::string& what, std::int64_t required, std::int64_t available)
      : DomainError(what, "infeasible"), required_(required), available_(available) {}

  std::int64_t required() const { return required_; }
  std::int64_t available() const { return available_; }

 private:
  std::int64_t required_;
  std::int64_t available_;
};

}  // namespace timberflow

#pragma once

#include <stdexcept>
#include <string>

namespace ringlock {

/// Input outside the documented domain of an operation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Servo chain has no unity-gain crossing (e.g. zero gain).
class LoopInactiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed loop fails the margin test.
class UnstableLoopError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The cw detuning left the lock window for longer than the configured dwell.
class LockLossError : public std::runtime_error {
 public:
  LockLossError(const std::string& what, double time_s)
      : std::runtime_error(what), time_s_(time_s) {}
  double time_s() const noexcept { return time_s_; }

 private:
  double time_s_;
};

/// Scenario file problems: unknown keys, missing sections, malformed values.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, std::string section = {})
      : std::runtime_error(what), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

}  // namespace ringlock

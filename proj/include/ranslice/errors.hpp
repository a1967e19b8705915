#pragma once

#include <stdexcept>
#include <string>

namespace ranslice {

// Invalid or infeasible configuration (distribution parameters, SLAs, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an operation precondition (action out of range, bad batch).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IncompatibleSnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SnapshotParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transfer scheme requested for a learner that cannot support it.
class UnsupportedSchemeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ranslice

#pragma once

#include <stdexcept>
#include <string>

namespace comfort {

/// Base for all library errors; the message is meant for the CLI user.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  SimulationError(std::string dwelling, long step, const std::string& what)
      : Error("dwelling " + dwelling + " step " + std::to_string(step) + ": " + what),
        dwelling_id(std::move(dwelling)),
        step_index(step) {}

  std::string dwelling_id;
  long step_index;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace comfort

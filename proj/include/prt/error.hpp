#pragma once

#include <stdexcept>
#include <string>

namespace prt {

/// Base class for every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// network
class UnreachablePair : public Error { using Error::Error; };
class NegativeHorizon : public Error { using Error::Error; };
class SameStation : public Error { using Error::Error; };
class UnknownStation : public Error { using Error::Error; };

// demand
class NonPositiveMean : public Error { using Error::Error; };
class AllZeroWeights : public Error { using Error::Error; };
class UnknownEventStation : public Error { using Error::Error; };

// engine
class DeadlockDetected : public Error { using Error::Error; };
class VehicleNotIdle : public Error { using Error::Error; };

// metrics
class NegativeWait : public Error { using Error::Error; };
class TimeRegression : public Error { using Error::Error; };

// configuration
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace prt

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqleval {

// Base class for every error the library raises on purpose. Anything else
// escaping a public function is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error("parse error at offset " + std::to_string(offset) + ": " + message),
        offset_(offset),
        detail_(message) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t offset_;
  std::string detail_;
};

class UnsupportedConstruct : public Error {
 public:
  using Error::Error;
};

class AmbiguousColumn : public Error {
 public:
  using Error::Error;
};

class ExecError : public Error {
 public:
  using Error::Error;
};

class Timeout : public Error {
 public:
  using Error::Error;
};

class ConnectionError : public Error {
 public:
  using Error::Error;
};

class CyclicFkError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& message, std::vector<std::string> ids)
      : Error(message), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class InfeasibleAlignment : public Error {
 public:
  using Error::Error;
};

class GatewayError : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class MissingMetric : public Error {
 public:
  using Error::Error;
};

}  // namespace sqleval

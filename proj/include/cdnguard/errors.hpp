#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdnguard {

// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParam : public Error {
 public:
  explicit InvalidParam(const std::string& what) : Error("InvalidParam: " + what) {}
};

// Raised when the offered load of a scenario is >= 1.
class UnstableQueue : public Error {
 public:
  UnstableQueue(std::string scenario, double load);

  const std::string& scenario() const noexcept { return scenario_; }
  double load() const noexcept { return load_; }

 private:
  std::string scenario_;
  double load_;
};

class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& what) : Error("InvalidConfig: " + what) {}
};

class InvalidSpec : public Error {
 public:
  explicit InvalidSpec(const std::string& what) : Error("InvalidSpec: " + what) {}
};

class InvalidSweep : public Error {
 public:
  explicit InvalidSweep(const std::string& what) : Error("InvalidSweep: " + what) {}
};

class EmptySample : public Error {
 public:
  explicit EmptySample(const std::string& what) : Error("EmptySample: " + what) {}
};

class EmptyFlags : public Error {
 public:
  explicit EmptyFlags(const std::string& what) : Error("EmptyFlags: " + what) {}
};

class UnknownToken : public Error {
 public:
  explicit UnknownToken(const std::string& token)
      : Error("UnknownToken: '" + token + "' is not in the label table"), token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Input that cannot be parsed at all (bad header, unreadable file, bad JSON).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("ParseError: " + what) {}
};

}  // namespace cdnguard

#pragma once

#include <stdexcept>
#include <string>

namespace sphpursuit {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// A series or quadrature could not reach its tolerance.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double achieved)
      : Error(what + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace sphpursuit

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lma {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Rotation angle too close to pi for the principal logarithm.
class BranchCutError : public Error {
 public:
  using Error::Error;
};

class DegenerateProjection : public Error {
 public:
  using Error::Error;
};

// Malformed input text. line() is 1-based; 0 when no line applies.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Problem structure makes the solve ill-posed (disconnected graph, free block
// with no constraint, ...).
class StructuralError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace lma

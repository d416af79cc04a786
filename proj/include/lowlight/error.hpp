#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lowlight {

// Coarse failure classes. The CLI maps each one to its own exit code.
enum class ErrorKind { Usage = 1, Io = 2, Parse = 3, Compute = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ComputeError : public Error {
 public:
  explicit ComputeError(const std::string& what)
      : Error(ErrorKind::Compute, what) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& what)
      : Error(ErrorKind::Compute, what) {}
};

// Byte offsets [begin, end) into the prompt text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, TokenSpan span)
      : Error(ErrorKind::Parse, what + " at [" + std::to_string(span.begin) +
                                    ", " + std::to_string(span.end) + ")"),
        span_(span) {}

  TokenSpan span() const noexcept { return span_; }

 private:
  TokenSpan span_;
};

}  // namespace lowlight

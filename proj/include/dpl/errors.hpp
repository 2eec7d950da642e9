#pragma once

#include <stdexcept>
#include <string>

namespace dpl {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input text; `at` is a byte offset (tree strings) or a
// 1-based line number (relation files), stated in the message.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t at) : Error(msg), at(at) {}
  std::size_t at = 0;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

// A byte span could not be matched against text or sentence spans.
class AlignmentError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace dpl

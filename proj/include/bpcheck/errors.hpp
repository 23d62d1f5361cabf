#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpcheck {

// Base for every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses carry structured detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (target DSL, diff, config line). `position` is a byte
// offset for single-line grammars and a 1-based line number for line-oriented
// formats; `what()` says which.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedLanguageError : public Error {
 public:
  explicit UnsupportedLanguageError(const std::string& language)
      : Error("unsupported language: " + language), language_(language) {}
  const std::string& language() const noexcept { return language_; }

 private:
  std::string language_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& backend, const std::string& message)
      : Error(backend + ": " + message), backend_(backend) {}
  const std::string& backend() const noexcept { return backend_; }

 private:
  std::string backend_;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

}  // namespace bpcheck

#pragma once

#include <stdexcept>
#include <string>

namespace cue {

// Base of every error the engine raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class AudioError : public Error {
public:
  using Error::Error;
};

class BackendError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

}  // namespace cue

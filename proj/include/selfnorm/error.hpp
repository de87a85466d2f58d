#pragma once

#include <stdexcept>
#include <string>

namespace selfnorm {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function or parameter set.
class DomainError : public Error {
public:
  using Error::Error;
};

// Root bracketing or iteration failed.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

class QuadratureError : public Error {
public:
  using Error::Error;
};

// lambda requested outside the range for which a process carries
// a supermartingale certificate.
class CertificationError : public Error {
public:
  using Error::Error;
};

// Malformed or inconsistent configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

} // namespace selfnorm

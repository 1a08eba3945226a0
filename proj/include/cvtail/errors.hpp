#pragma once

#include <stdexcept>
#include <string>

namespace cvtail {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

/// A tail or ratio could not be evaluated on (part of) the requested domain.
class DomainError : public Error
{
 public:
  using Error::Error;
};

/// The lattice engine only brackets laws supported on [0, inf).
class UnsupportedLaw : public Error
{
 public:
  using Error::Error;
};

class TruncationUnreachable : public Error
{
 public:
  using Error::Error;
};

class PremiseViolated : public Error
{
 public:
  using Error::Error;
};

class InfiniteMean : public Error
{
 public:
  using Error::Error;
};

class NonNegativityViolated : public Error
{
 public:
  using Error::Error;
};

/// Malformed or semantically invalid model / run configuration.
class ConfigError : public Error
{
 public:
  using Error::Error;
};

} // namespace cvtail

#pragma once

#include <stdexcept>
#include <string>

namespace vstiff {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Denominator vanishes exactly at the requested frequency.
class OnAxisPole : public Error {
 public:
  explicit OnAxisPole(double omega)
      : Error("on-axis pole at omega = " + std::to_string(omega)), omega_(omega) {}
  double omega() const noexcept { return omega_; }

 private:
  double omega_;
};

class ImproperSystem : public Error {
 public:
  using Error::Error;
};

class UnresolvedSignal : public Error {
 public:
  explicit UnresolvedSignal(const std::string& name)
      : Error("unresolved signal '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// I - D_loop is singular: the interconnection has no unique solution.
class IllPosedLoop : public Error {
 public:
  using Error::Error;
};

class UnstableSystem : public Error {
 public:
  explicit UnstableSystem(double abscissa)
      : Error("system is not strictly stable (spectral abscissa " + std::to_string(abscissa) + ")"),
        abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

class EigenFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace vstiff

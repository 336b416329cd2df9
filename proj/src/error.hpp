#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tcat {

enum class Errc {
  invalid_argument,
  io,
  format,
  crypto,
  non_finite_loss,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, std::string msg) { throw Error(code, std::move(msg)); }

}  // namespace tcat

#pragma once

#include <stdexcept>
#include <string>

namespace imstab {

enum class errc {
  invalid_resolution,
  masked_value,
  bad_exponent,
  precondition,
  coverage,
  resolution,
  assembly,
  resonance,
  refusal,
  degenerate_field,
  degenerate_stratum,
  empty_reconstruction,
  validation,
  io,
};

// All library failures throw this; the CLI maps `stage` into its
// diagnostics and the exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(errc kind, std::string stage, const std::string& what)
      : std::runtime_error(what), kind_(kind), stage_(std::move(stage)) {}

  errc kind() const { return kind_; }
  const std::string& stage() const { return stage_; }

 private:
  errc kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(errc kind, const std::string& stage, const std::string& msg) {
  throw Error(kind, stage, stage + ": " + msg);
}

}  // namespace imstab

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace fphist {

/// Base of every failure raised by the library. `kind()` is a stable,
/// machine-readable name that the CLI reports in its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FPHIST_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// Drift or diffusion produced a non-finite value.
FPHIST_DEFINE_ERROR(NumericalBlowup);
// Gessaman rule: M is not k * N^d.
FPHIST_DEFINE_ERROR(DivisibilityError);
// BTC rule: M or k is not a power of two.
FPHIST_DEFINE_ERROR(PowerOfTwoError);
// Equal coordinates straddle a cut, so equal-count cells are impossible.
FPHIST_DEFINE_ERROR(DegenerateDataError);
FPHIST_DEFINE_ERROR(ZeroVolumeError);
FPHIST_DEFINE_ERROR(ScheduleError);
FPHIST_DEFINE_ERROR(UnknownProblemError);
// Invalid parameters or configuration (dimension mismatch, negative sizes, ...).
FPHIST_DEFINE_ERROR(ConfigError);

#undef FPHIST_DEFINE_ERROR

}  // namespace fphist

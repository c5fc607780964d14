#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gdchaos/linalg.hpp"

namespace gdchaos {

/// Unknown catalog id or malformed catalog parameter.
class CatalogError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside an operation's domain (eta <= 0, empty sample set, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested operation is not defined for this input (no noise model,
/// singular Hessian, no finite truncation radius, ...).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An iterate left the finite region. Carries the offending state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const Vec& state, std::uint64_t iteration, std::int64_t member = -1)
      : std::runtime_error(describe(state, iteration, member)),
        state_(state),
        iteration_(iteration),
        member_(member) {}

  const Vec& state() const { return state_; }
  std::uint64_t iteration() const { return iteration_; }
  /// Ensemble member index, or -1 for a single orbit.
  std::int64_t member() const { return member_; }

 private:
  static std::string describe(const Vec& state, std::uint64_t iteration, std::int64_t member) {
    std::ostringstream os;
    os.precision(17);
    os << "divergence at iteration " << iteration;
    if (member >= 0) os << " of member " << member;
    os << ": state " << state;
    return os.str();
  }

  Vec state_;
  std::uint64_t iteration_;
  std::int64_t member_;
};

/// Iterates beyond this magnitude count as divergent.
inline constexpr double kDivergenceBound = 1e12;

inline bool is_divergent(const Vec& x) { return !x.all_finite() || x.max_abs() > kDivergenceBound; }

}  // namespace gdchaos

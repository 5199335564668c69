#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "gpid/channel.hpp"
#include "gpid/thin_pid.hpp"
#include "gpid/units.hpp"

namespace gpid {

enum class PidMethod { thin_pid, mmi_oracle, composed };

std::string_view to_string(PidMethod m);

// Redundant, unique and synergistic parts of I(X1,X2;Y).
//
// The reported components are clamped at zero; `raw` keeps the unclamped values
// so drift stays observable. Synergy (and ip_total) are absent when only the
// pairwise marginals were known.
struct PidResult {
  struct Components {
    double r = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;
    std::optional<double> s;
  };

  double r = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  std::optional<double> s;
  Unit unit = Unit::nats;

  double min_mi = 0.0;
  double i1 = 0.0;
  double i2 = 0.0;
  std::optional<double> ip_total;
  Components raw;
  PidMethod method = PidMethod::thin_pid;

  double total() const { return r + u1 + u2 + s.value_or(0.0); }
};

// Same decomposition expressed in another unit.
PidResult to_unit(const PidResult& p, Unit unit);

// Consistency tolerance before pid_from_solution reports an IntegrityError (converged solves only).
inline constexpr double kPidIntegrityTol = 1e-6;

// R = i1 + i2 - min_mi, U1 = i1 - R, U2 = i2 - R, S = ip_total - min_mi.
// ContractError when the solve did not converge and allow_unconverged is false.
PidResult pid_from_solution(const BroadcastChannel& ch, const SolverResult& res,
                            Unit unit = Unit::nats, bool allow_unconverged = false);

// Minimum-mutual-information decomposition; exact for all-scalar Gaussians.
// Inputs are in `unit`. ValidationError when ip_total < max(i1, i2) - 1e-9.
PidResult mmi_pid(double i1, double i2, double ip_total, Unit unit = Unit::nats);

// Componentwise sum over independent subsystems. ValidationError on mixed units.
PidResult compose_additive(std::span<const PidResult> parts);

// L1 distance between total-normalized quadruples; a zero-total result is the zero vector.
double pid_distance(const PidResult& a, const PidResult& b);

}  // namespace gpid

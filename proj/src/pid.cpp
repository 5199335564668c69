#include "gpid/pid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "gpid/errors.hpp"

namespace gpid {

namespace {

PidResult assemble(double i1, double i2, double min_mi, std::optional<double> ip_total,
                   Unit unit, PidMethod method) {
  PidResult p;
  p.unit = unit;
  p.method = method;
  p.i1 = i1;
  p.i2 = i2;
  p.min_mi = min_mi;
  p.ip_total = ip_total;
  p.raw.r = i1 + i2 - min_mi;
  p.raw.u1 = i1 - p.raw.r;
  p.raw.u2 = i2 - p.raw.r;
  if (ip_total) p.raw.s = *ip_total - min_mi;
  p.r = std::max(p.raw.r, 0.0);
  p.u1 = std::max(p.raw.u1, 0.0);
  p.u2 = std::max(p.raw.u2, 0.0);
  if (p.raw.s) p.s = std::max(*p.raw.s, 0.0);
  return p;
}

std::optional<double> convert_opt(std::optional<double> v, Unit from, Unit to) {
  if (!v) return v;
  return convert(*v, from, to);
}

}  // namespace

std::string_view to_string(PidMethod m) {
  switch (m) {
    case PidMethod::thin_pid:
      return "thin_pid";
    case PidMethod::mmi_oracle:
      return "mmi_oracle";
    case PidMethod::composed:
      return "composed";
  }
  return "unknown";
}

PidResult to_unit(const PidResult& p, Unit unit) {
  if (p.unit == unit) return p;
  const Unit from = p.unit;
  auto c = [&](double v) { return convert(v, from, unit); };
  PidResult q = p;
  q.unit = unit;
  q.r = c(p.r);
  q.u1 = c(p.u1);
  q.u2 = c(p.u2);
  q.s = convert_opt(p.s, from, unit);
  q.min_mi = c(p.min_mi);
  q.i1 = c(p.i1);
  q.i2 = c(p.i2);
  q.ip_total = convert_opt(p.ip_total, from, unit);
  q.raw.r = c(p.raw.r);
  q.raw.u1 = c(p.raw.u1);
  q.raw.u2 = c(p.raw.u2);
  q.raw.s = convert_opt(p.raw.s, from, unit);
  return q;
}

PidResult pid_from_solution(const BroadcastChannel& ch, const SolverResult& res, Unit unit,
                            bool allow_unconverged) {
  if (!res.converged && !allow_unconverged) {
    throw ContractError("solver did not converge (" + std::string(to_string(res.reason)) +
                        "); pass allow_unconverged to assemble anyway");
  }
  const PidResult p =
      assemble(ch.i1, ch.i2, res.min_mi, ch.ip_total, Unit::nats, PidMethod::thin_pid);
  const double worst = std::min({p.raw.r, p.raw.u1, p.raw.u2, p.raw.s.value_or(0.0)});
  if (res.converged && worst < -kPidIntegrityTol) {
    std::ostringstream msg;
    msg << "PID consistency violated: raw components (R=" << p.raw.r << ", U1=" << p.raw.u1
        << ", U2=" << p.raw.u2 << ", S=" << p.raw.s.value_or(0.0)
        << ") fall below zero beyond tolerance";
    throw IntegrityError(msg.str());
  }
  return to_unit(p, unit);
}

PidResult mmi_pid(double i1, double i2, double ip_total, Unit unit) {
  if (!(i1 >= 0.0) || !(i2 >= 0.0) || !(ip_total >= 0.0)) {
    throw ValidationError("MMI inputs must be non-negative");
  }
  const double tol = convert(1e-9, Unit::nats, unit);
  if (ip_total < std::max(i1, i2) - tol) {
    throw ValidationError("ip_total is below max(i1, i2); inputs are inconsistent");
  }
  PidResult p = assemble(i1, i2, std::max(i1, i2), ip_total, unit, PidMethod::mmi_oracle);
  p.r = p.raw.r = std::min(i1, i2);
  p.u1 = p.raw.u1 = i1 - p.r;
  p.u2 = p.raw.u2 = i2 - p.r;
  return p;
}

PidResult compose_additive(std::span<const PidResult> parts) {
  if (parts.empty()) throw ValidationError("compose_additive needs at least one part");
  PidResult out;
  out.unit = parts.front().unit;
  out.method = PidMethod::composed;
  bool all_s = true;
  bool all_ip = true;
  double s = 0.0;
  double raw_s = 0.0;
  double ip = 0.0;
  for (const PidResult& p : parts) {
    if (p.unit != out.unit) throw ValidationError("cannot compose PID results with mixed units");
    out.r += p.r;
    out.u1 += p.u1;
    out.u2 += p.u2;
    out.min_mi += p.min_mi;
    out.i1 += p.i1;
    out.i2 += p.i2;
    out.raw.r += p.raw.r;
    out.raw.u1 += p.raw.u1;
    out.raw.u2 += p.raw.u2;
    all_s = all_s && p.s.has_value();
    all_ip = all_ip && p.ip_total.has_value();
    if (p.s) {
      s += *p.s;
      raw_s += p.raw.s.value_or(*p.s);
    }
    if (p.ip_total) ip += *p.ip_total;
  }
  if (all_s) {
    out.s = s;
    out.raw.s = raw_s;
  }
  if (all_ip) out.ip_total = ip;
  return out;
}

double pid_distance(const PidResult& a, const PidResult& b) {
  if (a.unit != b.unit) return pid_distance(a, to_unit(b, a.unit));
  auto normalized = [](const PidResult& p) {
    std::array<double, 4> v{p.r, p.u1, p.u2, p.s.value_or(0.0)};
    const double total = p.total();
    if (total > 0.0) {
      for (double& x : v) x /= total;
    } else {
      v.fill(0.0);
    }
    return v;
  };
  const auto na = normalized(a);
  const auto nb = normalized(b);
  double d = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) d += std::abs(na[i] - nb[i]);
  return d;
}

}  // namespace gpid

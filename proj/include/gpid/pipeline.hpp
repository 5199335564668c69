#pragma once

#include "gpid/channel.hpp"
#include "gpid/gauss_core.hpp"
#include "gpid/pid.hpp"
#include "gpid/thin_pid.hpp"
#include "gpid/units.hpp"

namespace gpid {

struct PipelineRun {
  BroadcastChannel channel;
  SolverResult solver;
  PidResult pid;
  double wall_ms = 0.0;  // reduction + solve + assembly
};

// reduce_to_channel -> solve -> pid_from_solution.
PipelineRun run_pipeline(const CovarianceModel& cov, const SolverConfig& cfg = {},
                         Unit unit = Unit::nats, bool allow_unconverged = false);

}  // namespace gpid

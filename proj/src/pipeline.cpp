#include "gpid/pipeline.hpp"

#include <chrono>

namespace gpid {

PipelineRun run_pipeline(const CovarianceModel& cov, const SolverConfig& cfg, Unit unit,
                         bool allow_unconverged) {
  const auto start = std::chrono::steady_clock::now();
  PipelineRun run;
  run.channel = reduce_to_channel(cov);
  run.solver = solve(run.channel, cfg);
  run.pid = pid_from_solution(run.channel, run.solver, unit, allow_unconverged);
  run.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace gpid

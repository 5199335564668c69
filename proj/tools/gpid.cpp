// gpid: Gaussian PID estimation, synthetic benchmarks and acceptance suites.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "gpid/bench.hpp"
#include "gpid/errors.hpp"
#include "gpid/io.hpp"
#include "gpid/pipeline.hpp"
#include "gpid/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kInput = 2,
  kNotConverged = 3,
  kIo = 4,
  kBenchFailed = 5,
};

std::optional<std::uint64_t> env_seed() {
  const char* text = std::getenv("GPID_SEED");
  if (!text || !*text) return std::nullopt;
  std::uint64_t v = 0;
  std::istringstream in(text);
  if (!(in >> v) || !in.eof())
    throw gpid::ValidationError(std::string("GPID_SEED must be a non-negative integer, got '") +
                                text + "'");
  return v;
}

gpid::BlockDims parse_dims(const std::string& text) {
  gpid::BlockDims d;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> d.d1 >> c1 >> d.d2 >> c2 >> d.dy) || c1 != ',' || c2 != ',' || !in.eof())
    throw gpid::ValidationError("--dims must look like d1,d2,dy, got '" + text + "'");
  gpid::check_dims(d);
  return d;
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << j.dump(2) << '\n';
  else
    gpid::write_json_file(out, j);
}

struct SolveFlags {
  std::string unit = "bits";
  std::string out;
  int max_iters = gpid::SolverConfig{}.max_iters;
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--unit", f.unit, "Report unit")
      ->check(CLI::IsMember({"bits", "nats"}))
      ->capture_default_str();
  cmd->add_option("-o,--out", f.out, "Report path (stdout when omitted)");
  cmd->add_option("--max-iters", f.max_iters, "Solver iteration cap")->capture_default_str();
}

int run_report(const gpid::CovarianceModel& cov, json input, const SolveFlags& f) {
  gpid::SolverConfig cfg;
  cfg.max_iters = f.max_iters;
  cfg.validate();
  const gpid::PipelineRun run = gpid::run_pipeline(cov, cfg, gpid::parse_unit(f.unit), true);

  gpid::PidReport report;
  report.input = std::move(input);
  report.dims = cov.dims();
  report.pid = run.pid;
  report.solver = {run.solver.iterations, run.solver.converged,
                   std::string(gpid::to_string(run.solver.reason)), run.wall_ms,
                   run.solver.projected_grad_norm};
  emit(gpid::to_json(report), f.out);
  if (!run.solver.converged) {
    std::cerr << "gpid: solver did not converge (" << gpid::to_string(run.solver.reason)
              << " after " << run.solver.iterations << " iterations)\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_estimate(const std::string& samples, const std::string& dims, const SolveFlags& f) {
  const gpid::BlockDims expected = parse_dims(dims);
  const gpid::SampleMatrix data = gpid::read_samples_csv(fs::path(samples), expected);
  const gpid::CovarianceModel cov = gpid::estimate_covariance(data);
  return run_report(cov, {{"kind", "samples"}, {"path", samples}, {"n", data.rows()}}, f);
}

int cmd_solve(const std::string& path, const SolveFlags& f) {
  const gpid::CovarianceModel cov = gpid::covariance_from_json(gpid::read_json_file(path));
  return run_report(cov, {{"kind", "covariance"}, {"path", path}}, f);
}

struct SynthFlags {
  std::string spec;
  std::string out;
  long long n = 0;
  std::string unit = "bits";
  std::vector<std::string> transforms;
};

int cmd_synth(const SynthFlags& f) {
  gpid::SynthSpec spec = gpid::synth_spec_from_json(gpid::read_json_file(f.spec));
  if (auto s = env_seed()) spec.seed = *s;
  spec.validate();
  if (f.n < 0) throw gpid::ValidationError("n must be non-negative");

  std::array<gpid::BlockTransform, 3> transforms{gpid::BlockTransform::identity,
                                                 gpid::BlockTransform::identity,
                                                 gpid::BlockTransform::identity};
  if (!f.transforms.empty()) {
    if (f.transforms.size() != 3)
      throw gpid::ValidationError("--transform takes three values (X1, X2, Y)");
    for (std::size_t i = 0; i < 3; ++i) transforms[i] = gpid::parse_block_transform(f.transforms[i]);
  }

  const fs::path out(f.out);
  fs::path sidecar = out;
  sidecar.replace_extension(".json");
  if (sidecar == out) throw gpid::ValidationError("samples path must not end in .json");

  const gpid::SynthInstance inst = gpid::make_instance(spec);
  std::optional<std::string> samples_name;
  if (f.n > 0) {
    gpid::SampleMatrix samples = gpid::sample_instance(inst, f.n, spec.seed);
    samples = gpid::transform_samples(samples, transforms);
    gpid::write_samples_csv(out, samples);
    samples_name = out.filename().string();
  }
  json side = gpid::synth_sidecar(spec, inst, f.n, samples_name, gpid::parse_unit(f.unit));
  side["transforms"] = f.transforms.empty() ? json::array({"identity", "identity", "identity"})
                                            : json(f.transforms);
  gpid::write_json_file(sidecar, side);
  return kOk;
}

struct BenchFlags {
  std::string suite;
  std::string out;
  int jobs = 1;
  int reps = gpid::BenchOptions{}.scaling_reps;
};

int cmd_bench(const BenchFlags& f) {
  gpid::BenchOptions opts;
  opts.jobs = f.jobs;
  opts.scaling_reps = f.reps;
  if (auto s = env_seed()) opts.seed = *s;
  const gpid::SuiteResult res = gpid::run_suite(f.suite, opts);

  json j = gpid::to_json(res);
  j["seed"] = opts.seed;
  j["jobs"] = opts.jobs;
  j["unit"] = "bits";
  j["versions"] = {{"tool", gpid::kToolVersion}, {"format", "gpid-bench-1"}};
  if (!f.out.empty()) gpid::write_json_file(f.out, j);

  for (const auto& c : res.criteria)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  if (!res.passed()) {
    for (const auto& c : res.criteria)
      if (!c.pass) std::cerr << "gpid: criterion failed: " << c.name << '\n';
    return kBenchFailed;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian partial information decomposition"};
  app.require_subcommand(1);

  SolveFlags est_flags;
  std::string est_samples, est_dims;
  auto* estimate = app.add_subcommand("estimate", "PID of a samples CSV");
  estimate->add_option("samples", est_samples, "CSV with header x1_*,x2_*,y_*")->required();
  estimate->add_option("--dims", est_dims, "Block widths d1,d2,dy")->required();
  add_solve_flags(estimate, est_flags);

  SolveFlags solve_flags;
  std::string cov_path;
  auto* solve = app.add_subcommand("solve", "PID of a covariance JSON file");
  solve->add_option("covariance", cov_path, "gpid-cov-1 file")->required();
  add_solve_flags(solve, solve_flags);

  SynthFlags synth_flags;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth->add_option("spec", synth_flags.spec, "Synth spec JSON")->required();
  synth->add_option("out", synth_flags.out, "Samples CSV path; the sidecar gets a .json extension")
      ->required();
  synth->add_option("n", synth_flags.n, "Number of samples (0 writes the sidecar only)")
      ->required();
  synth->add_option("--unit", synth_flags.unit, "Oracle unit")
      ->check(CLI::IsMember({"bits", "nats"}))
      ->capture_default_str();
  synth->add_option("--transform", synth_flags.transforms,
                    "Per-block transform for X1 X2 Y: identity, cube or cbrt")
      ->delimiter(',')
      ->expected(3);

  BenchFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "Run an acceptance suite");
  bench->add_option("suite", bench_flags.suite, "Suite name")->required();
  bench->add_option("-o,--out", bench_flags.out, "JSON report path");
  bench->add_option("--jobs", bench_flags.jobs, "Parallel instances")->capture_default_str();
  bench->add_option("--reps", bench_flags.reps, "Timed repetitions per scaling shape")
      ->capture_default_str();

  auto* version = app.add_subcommand("version", "Print tool and format versions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*estimate) return cmd_estimate(est_samples, est_dims, est_flags);
    if (*solve) return cmd_solve(cov_path, solve_flags);
    if (*synth) return cmd_synth(synth_flags);
    if (*bench) return cmd_bench(bench_flags);
    if (*version) {
      std::cout << "gpid " << gpid::kToolVersion << " (report " << gpid::kReportFormat
                << ", covariance " << gpid::kCovFormat << ", synth " << gpid::kSynthFormat
                << ")\n";
      return kOk;
    }
  } catch (const gpid::IoError& e) {
    std::cerr << "gpid: " << e.what() << '\n';
    return kIo;
  } catch (const gpid::IntegrityError& e) {
    std::cerr << "gpid: internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const gpid::Error& e) {
    std::cerr << "gpid: " << e.what() << '\n';
    return kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "gpid: " << e.what() << '\n';
    return kIo;
  }
  return kInternal;
}

#include "gpid/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <thread>

#include "gpid/errors.hpp"
#include "gpid/io.hpp"
#include "gpid/pipeline.hpp"
#include "gpid/rng.hpp"
#include "gpid/synth.hpp"

namespace gpid {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

constexpr double kOracleTolBits = 1e-8;
constexpr double kDoublingTolBits = 1e-7;  // per copy
constexpr double kJumpBits = 0.05;
constexpr double kGradRelTol = 1e-5;
constexpr double kInvarianceTolBits = 1e-6;
constexpr double kBoundTol = 1e-7;
constexpr double kScalingRatio = 0.25;
constexpr double kScalingSlope = 3.4;
constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<std::string_view, 7> kSuites = {
    "canonical", "coop", "rotation", "doubling", "scaling", "gradient", "invariance"};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Runs fn(0..n-1) on up to `jobs` threads. The first exception is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SolverConfig tracked_config() {
  SolverConfig cfg;
  cfg.track_feasibility = true;
  return cfg;
}

// Largest per-component gap; infinite when only one side has synergy.
double component_error(const PidResult& a, const PidResult& b, double scale_b = 1.0) {
  double err = std::max({std::abs(a.r - scale_b * b.r), std::abs(a.u1 - scale_b * b.u1),
                         std::abs(a.u2 - scale_b * b.u2)});
  if (a.s.has_value() != b.s.has_value()) return kInf;
  if (a.s) err = std::max(err, std::abs(*a.s - scale_b * *b.s));
  return err;
}

// Feasibility and bound margins of one solved instance; positive numbers are violations.
struct Bounds {
  double norm_excess = -kInf;  // max iterate norm - (1 - sv_eps)
  double lower_gap = -kInf;    // max(i1, i2) - tol - min_mi
  double upper_gap = -kInf;    // min_mi - ip_total - tol
  double min_raw = kInf;       // smallest raw component

  void add(const SolverResult& res, const PidResult& pid_bits, const SolverConfig& cfg) {
    const double norm = res.max_iterate_norm.value_or(kInf);
    norm_excess = std::max(norm_excess, norm - (1.0 - cfg.sv_eps));
    lower_gap = std::max(lower_gap, std::max(pid_bits.i1, pid_bits.i2) - kBoundTol - pid_bits.min_mi);
    if (pid_bits.ip_total)
      upper_gap = std::max(upper_gap, pid_bits.min_mi - *pid_bits.ip_total - kBoundTol);
    min_raw = std::min({min_raw, pid_bits.raw.r, pid_bits.raw.u1, pid_bits.raw.u2});
    if (pid_bits.raw.s) min_raw = std::min(min_raw, *pid_bits.raw.s);
  }

  // Iterate norms within one ulp-scale slack of the cap count as feasible.
  bool ok() const {
    return norm_excess <= 1e-12 && lower_gap <= 0.0 && upper_gap <= 0.0 && min_raw >= -kBoundTol;
  }

  json to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"norm_excess", num(norm_excess)},
            {"lower_gap_bits", num(lower_gap)},
            {"upper_gap_bits", num(upper_gap)},
            {"min_raw_bits", num(min_raw)}};
  }

  std::string detail() const {
    return "norm excess " + fmt(norm_excess) + ", lower gap " + fmt(lower_gap) + ", upper gap " +
           fmt(upper_gap) + ", min raw " + fmt(min_raw) + " bits";
  }
};

struct Solved {
  PidResult pid;  // bits
  SolverResult solver;
  double seconds = 0.0;
  std::string error;
};

Solved solve_cov(const CovarianceModel& cov) {
  Solved out;
  const auto t0 = Clock::now();
  try {
    const PipelineRun run = run_pipeline(cov, tracked_config(), Unit::bits, true);
    out.pid = run.pid;
    out.solver = run.solver;
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.seconds = seconds_since(t0);
  return out;
}

json solved_json(const Solved& s) {
  if (!s.error.empty()) return {{"error", s.error}};
  return {{"pid", pid_values_json(s.pid)},
          {"iterations", s.solver.iterations},
          {"converged", s.solver.converged},
          {"stop_reason", std::string(to_string(s.solver.reason))},
          {"seconds", s.seconds}};
}

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::string_view suite) : t0_(Clock::now()) { r_.suite = suite; }

  void add(std::string_view check, bool pass, std::string detail) {
    r_.criteria.push_back({r_.suite + "." + std::string(check), pass, std::move(detail)});
  }

  void add_bounds(const Bounds& b, int errors) {
    add("feasibility", b.ok() && errors == 0,
        b.detail() + (errors ? ", " + std::to_string(errors) + " failed solves" : ""));
    r_.data["bounds"] = b.to_json();
  }

  void add_runtime(double limit_s) {
    const double s = seconds_since(t0_);
    add("runtime", s < limit_s, fmt(s) + " s (limit " + fmt(limit_s) + " s)");
  }

  json& data() { return r_.data; }

  SuiteResult finish() {
    r_.seconds = seconds_since(t0_);
    return std::move(r_);
  }

 private:
  SuiteResult r_;
  Clock::time_point t0_;
};

// Oracle comparison shared by the canonical and coop suites.
struct OracleCase {
  std::string label;
  SynthSpec spec;
};

void run_oracle_cases(SuiteBuilder& b, const std::vector<OracleCase>& cases, int jobs,
                      std::string_view check, double runtime_limit) {
  std::vector<Solved> solved(cases.size());
  std::vector<PidResult> oracles(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    const SynthInstance inst = make_instance(cases[i].spec);
    oracles[i] = to_unit(*inst.oracle, Unit::bits);
    solved[i] = solve_cov(inst.cov);
  });

  double worst = 0.0;
  std::string worst_label;
  int errors = 0;
  Bounds bounds;
  json rows = json::array();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    json row = solved_json(solved[i]);
    row["label"] = cases[i].label;
    row["spec"] = to_json(cases[i].spec);
    row["oracle"] = pid_values_json(oracles[i]);
    double err = kInf;
    if (solved[i].error.empty()) {
      err = component_error(solved[i].pid, oracles[i]);
      bounds.add(solved[i].solver, solved[i].pid, tracked_config());
    } else {
      ++errors;
    }
    row["max_error_bits"] = std::isfinite(err) ? json(err) : json(nullptr);
    if (!(err <= worst)) {
      worst = err;
      worst_label = cases[i].label;
    }
    rows.push_back(std::move(row));
  }
  b.data()["instances"] = std::move(rows);
  b.data()["max_error_bits"] = std::isfinite(worst) ? json(worst) : json(nullptr);
  b.add(check, worst < kOracleTolBits && errors == 0,
        std::to_string(cases.size()) + " instances, max error " + fmt(worst) + " bits" +
            (worst_label.empty() ? "" : " at " + worst_label) + " (tol " + fmt(kOracleTolBits) +
            ")");
  b.add_bounds(bounds, errors);
  b.add_runtime(runtime_limit);
}

SuiteResult canonical_suite(const BenchOptions& opts) {
  SuiteBuilder b("canonical");
  std::vector<OracleCase> cases;
  for (CanonicalCase c : {CanonicalCase::uniq_red, CanonicalCase::uniq_syn, CanonicalCase::red_syn})
    for (double s2 : {0.25, 0.5, 1.0, 2.0, 4.0})
      for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        std::ostringstream label;
        label << to_string(c) << "(sigma2=" << s2 << ",rho=" << rho << ")";
        cases.push_back({label.str(), SynthSpec{variant::Canonical1d{c, s2, rho}, opts.seed}});
      }
  run_oracle_cases(b, cases, opts.jobs, "oracle", 10.0);
  return b.finish();
}

SuiteResult coop_suite(const BenchOptions& opts) {
  SuiteBuilder b("coop");
  std::vector<OracleCase> cases;
  for (double a : {0.0, 0.5, 1.0, 2.0, 3.0}) {
    std::ostringstream label;
    label << "coop_gain(alpha=" << a << ")";
    cases.push_back({label.str(), SynthSpec{variant::CoopGain{a}, opts.seed}});
  }
  run_oracle_cases(b, cases, opts.jobs, "oracle", 10.0);
  return b.finish();
}

SuiteResult rotation_suite(const BenchOptions& opts) {
  SuiteBuilder b("rotation");
  constexpr int kPoints = 50;
  std::vector<double> thetas(kPoints);
  for (int k = 0; k < kPoints; ++k) thetas[k] = k * (std::numbers::pi / 2) / (kPoints - 1);
  thetas.back() = std::numbers::pi / 2;

  std::vector<Solved> solved(kPoints);
  std::vector<std::optional<PidResult>> oracles(kPoints);
  parallel_for(kPoints, opts.jobs, [&](std::size_t i) {
    const SynthInstance inst = make_instance(SynthSpec{variant::Rotation{thetas[i]}, opts.seed});
    if (inst.oracle) oracles[i] = to_unit(*inst.oracle, Unit::bits);
    solved[i] = solve_cov(inst.cov);
  });

  int errors = 0;
  Bounds bounds;
  json rows = json::array();
  for (int i = 0; i < kPoints; ++i) {
    json row = solved_json(solved[i]);
    row["theta"] = thetas[i];
    if (oracles[i]) row["oracle"] = pid_values_json(*oracles[i]);
    if (solved[i].error.empty())
      bounds.add(solved[i].solver, solved[i].pid, tracked_config());
    else
      ++errors;
    rows.push_back(std::move(row));
  }

  double endpoint_err = 0.0;
  int endpoints = 0;
  for (int i : {0, kPoints - 1}) {
    if (!oracles[i] || !solved[i].error.empty()) {
      endpoint_err = kInf;
      continue;
    }
    ++endpoints;
    endpoint_err = std::max(endpoint_err, component_error(solved[i].pid, *oracles[i]));
  }
  b.add("endpoints", endpoints == 2 && endpoint_err < kOracleTolBits,
        "theta in {0, pi/2}, max error " + fmt(endpoint_err) + " bits (tol " +
            fmt(kOracleTolBits) + ")");

  double jump = 0.0;
  for (int i = 1; i < kPoints; ++i) {
    if (!solved[i].error.empty() || !solved[i - 1].error.empty()) {
      jump = kInf;
      break;
    }
    jump = std::max(jump, component_error(solved[i].pid, solved[i - 1].pid));
  }
  b.add("continuity", jump < kJumpBits,
        std::to_string(kPoints) + "-point sweep, max adjacent jump " + fmt(jump) + " bits (tol " +
            fmt(kJumpBits) + ")");

  b.data()["instances"] = std::move(rows);
  b.data()["max_endpoint_error_bits"] = std::isfinite(endpoint_err) ? json(endpoint_err) : json(nullptr);
  b.data()["max_jump_bits"] = std::isfinite(jump) ? json(jump) : json(nullptr);
  b.add_bounds(bounds, errors);
  b.add_runtime(30.0);
  return b.finish();
}

// Solves k stacked copies of `base` and compares against k times the base solution.
void run_doubling(SuiteBuilder& b, const std::string& check, std::shared_ptr<const SynthSpec> base,
                  int jobs, Bounds& bounds, int& errors) {
  const std::vector<int> ks = {2, 4, 8, 16, 32};
  const Solved base_run = solve_cov(make_instance(*base).cov);
  std::vector<Solved> solved(ks.size());
  std::vector<std::optional<PidResult>> oracles(ks.size());
  parallel_for(ks.size(), jobs, [&](std::size_t i) {
    const SynthInstance inst = make_instance(SynthSpec{variant::Doubling{base, ks[i]}, base->seed});
    if (inst.oracle) oracles[i] = to_unit(*inst.oracle, Unit::bits);
    solved[i] = solve_cov(inst.cov);
  });

  if (base_run.error.empty())
    bounds.add(base_run.solver, base_run.pid, tracked_config());
  else
    ++errors;
  bool pass = base_run.error.empty();
  double worst_ratio = pass ? 0.0 : kInf;  // error / (tol * k)
  json rows = json::array();
  for (std::size_t i = 0; i < ks.size(); ++i) {
    json row = solved_json(solved[i]);
    row["k"] = ks[i];
    if (oracles[i]) row["oracle"] = pid_values_json(*oracles[i]);
    if (!solved[i].error.empty()) {
      ++errors;
      pass = false;
      worst_ratio = kInf;
    } else {
      bounds.add(solved[i].solver, solved[i].pid, tracked_config());
    }
    if (!solved[i].error.empty() || !base_run.error.empty()) {
      rows.push_back(std::move(row));
      continue;
    }
    const double err = component_error(solved[i].pid, base_run.pid, ks[i]);
    row["additivity_error_bits"] = err;
    if (oracles[i]) row["oracle_error_bits"] = component_error(solved[i].pid, *oracles[i]);
    worst_ratio = std::max(worst_ratio, err / (kDoublingTolBits * ks[i]));
    pass = pass && err < kDoublingTolBits * ks[i];
    rows.push_back(std::move(row));
  }
  b.data()[check] = {{"base_spec", to_json(*base)},
                     {"base", solved_json(base_run)},
                     {"instances", std::move(rows)}};
  b.add(check, pass, "k in {2,4,8,16,32}, worst error / (1e-7 k) = " + fmt(worst_ratio));
}

SuiteResult doubling_suite(const BenchOptions& opts) {
  SuiteBuilder b("doubling");
  Bounds bounds;
  int errors = 0;
  run_doubling(b, "additivity",
               std::make_shared<const SynthSpec>(
                   SynthSpec{variant::Canonical1d{CanonicalCase::red_syn, 1.0, 0.0}, opts.seed}),
               opts.jobs, bounds, errors);
  // The red_syn base starts at its optimum; a rotated base makes every copy iterate.
  run_doubling(b, "additivity_rotation",
               std::make_shared<const SynthSpec>(SynthSpec{variant::Rotation{0.7}, opts.seed}),
               opts.jobs, bounds, errors);
  b.add_bounds(bounds, errors);
  b.add_runtime(60.0);
  return b.finish();
}

// Draws from a substream of the suite seed so each instance is independent of the others.
class Draws {
 public:
  Draws(std::uint64_t seed, std::uint64_t stream) : rng_(CounterRng(seed).bits(stream)) {}

  double normal() { return rng_.normal(next_++); }
  double uniform() { return rng_.uniform(1'000'000'007ULL + next_++); }
  Index uniform_int(Index lo, Index hi) {
    return lo + static_cast<Index>(uniform() * static_cast<double>(hi - lo + 1));
  }
  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

 private:
  CounterRng rng_;
  std::uint64_t next_ = 0;
};

Matrix random_spd(Draws& d, Index n, double ridge) {
  const Matrix a = d.normal_matrix(n, n);
  return a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
}

SuiteResult gradient_suite(const BenchOptions& opts) {
  SuiteBuilder b("gradient");
  constexpr int kChannels = 20;
  constexpr int kPoints = 20;
  constexpr double kStep = 1e-6;

  std::vector<json> rows(kChannels);
  std::vector<double> worst(kChannels, 0.0);
  parallel_for(kChannels, opts.jobs, [&](std::size_t c) {
    Draws d(opts.seed, 0x6772616400000000ULL + c);
    const Index d1 = c == 0 ? 8 : d.uniform_int(1, 8);
    const Index d2 = c == 0 ? 5 : d.uniform_int(1, 5);
    const Index dy = c == 0 ? 3 : d.uniform_int(1, 3);
    const BroadcastChannel ch =
        make_channel(d.normal_matrix(d1, dy), d.normal_matrix(d2, dy), random_spd(d, dy, 0.25));
    const ThinPidProblem problem(ch);

    double channel_worst = 0.0;
    for (int p = 0; p < kPoints; ++p) {
      Matrix s = d.normal_matrix(d1, d2);
      const double radius = 0.05 + 0.9 * d.uniform();
      s *= radius / spectral_norm(s);

      Matrix fd(d1, d2);
      for (Index j = 0; j < d2; ++j)
        for (Index i = 0; i < d1; ++i) {
          Matrix plus = s, minus = s;
          plus(i, j) += kStep;
          minus(i, j) -= kStep;
          fd(i, j) = (problem.objective(plus) - problem.objective(minus)) / (2 * kStep);
        }
      const Matrix block = 2.0 * gradient(ch, s);
      const Matrix fast = 2.0 * problem.evaluate(s).gradient;
      const double scale = std::max(block.norm(), 1e-12);
      const double err =
          std::max((fd - block).norm() / scale, (fd - fast).norm() / std::max(fast.norm(), 1e-12));
      channel_worst = std::max(channel_worst, err);
    }
    worst[c] = channel_worst;
    rows[c] = {{"dims", {d1, d2, dy}}, {"points", kPoints}, {"max_rel_error", channel_worst}};
  });

  const double max_err = *std::max_element(worst.begin(), worst.end());
  b.data()["channels"] = rows;
  b.data()["max_rel_error"] = max_err;
  b.add("finite_difference", max_err < kGradRelTol,
        std::to_string(kChannels) + " channels x " + std::to_string(kPoints) +
            " points, max relative error " + fmt(max_err) + " (tol " + fmt(kGradRelTol) + ")");
  b.add_runtime(30.0);
  return b.finish();
}

SuiteResult invariance_suite(const BenchOptions& opts) {
  SuiteBuilder b("invariance");
  constexpr int kJoints = 10;

  std::vector<Solved> before(kJoints), after(kJoints);
  std::vector<BlockDims> dims(kJoints);
  parallel_for(kJoints, opts.jobs, [&](std::size_t c) {
    Draws d(opts.seed, 0x696e766100000000ULL + c);
    BlockDims bd{16, 16, 4};
    if (c > 0) bd = {d.uniform_int(1, 16), d.uniform_int(1, 16), d.uniform_int(1, 4)};
    dims[c] = bd;
    const Index n = bd.total();
    const Matrix sigma = random_spd(d, n, 0.1);

    Matrix t = Matrix::Zero(n, n);
    Index offset = 0;
    for (Index w : {bd.d1, bd.d2, bd.dy}) {
      t.block(offset, offset, w, w) = d.normal_matrix(w, w) / std::sqrt(static_cast<double>(w)) +
                                      1.5 * Matrix::Identity(w, w);
      offset += w;
    }
    Matrix mapped = t * sigma * t.transpose();
    mapped = 0.5 * (mapped + mapped.transpose());
    before[c] = solve_cov(CovarianceModel(bd, Vector::Zero(n), sigma));
    after[c] = solve_cov(CovarianceModel(bd, Vector::Zero(n), mapped));
  });

  int errors = 0;
  Bounds bounds;
  double worst = 0.0;
  json rows = json::array();
  for (int c = 0; c < kJoints; ++c) {
    json row = {{"dims", {dims[c].d1, dims[c].d2, dims[c].dy}},
                {"original", solved_json(before[c])},
                {"mapped", solved_json(after[c])}};
    if (!before[c].error.empty() || !after[c].error.empty()) {
      ++errors;
      worst = kInf;
      rows.push_back(std::move(row));
      continue;
    }
    bounds.add(before[c].solver, before[c].pid, tracked_config());
    bounds.add(after[c].solver, after[c].pid, tracked_config());
    const double err = component_error(before[c].pid, after[c].pid);
    row["max_change_bits"] = err;
    worst = std::max(worst, err);
    rows.push_back(std::move(row));
  }
  b.data()["instances"] = std::move(rows);
  b.data()["max_change_bits"] = std::isfinite(worst) ? json(worst) : json(nullptr);
  b.add("linear_maps", errors == 0 && worst < kInvarianceTolBits,
        std::to_string(kJoints) + " joints, max per-component change " + fmt(worst) +
            " bits (tol " + fmt(kInvarianceTolBits) + ")");
  b.add_bounds(bounds, errors);
  return b.finish();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SuiteResult scaling_suite(const BenchOptions& opts) {
  SuiteBuilder b("scaling");
  constexpr Index kDy = 8;
  const std::vector<std::pair<Index, Index>> shapes = {
      {64, 64}, {128, 128}, {256, 256}, {512, 512}, {512, 32}};
  const int reps = std::max(opts.scaling_reps, 1);

  Bounds bounds;
  int errors = 0;
  std::map<std::pair<Index, Index>, double> medians;
  json rows = json::array();
  // Timing stays serial regardless of --jobs.
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const auto [d1, d2] = shapes[s];
    Draws d(opts.seed, 0x7363616c00000000ULL + s);
    const BroadcastChannel ch = make_channel(d.normal_matrix(d1, kDy), d.normal_matrix(d2, kDy),
                                             Matrix::Identity(kDy, kDy));
    json row = {{"d1", d1}, {"d2", d2}, {"dy", kDy}};
    try {
      const SolverResult warm = solve(ch, tracked_config());
      bounds.add(warm, pid_from_solution(ch, warm, Unit::bits, true), tracked_config());
      row["iterations"] = warm.iterations;
      row["converged"] = warm.converged;
      row["stop_reason"] = std::string(to_string(warm.reason));

      std::vector<double> times;
      for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        const SolverResult res = solve(ch);
        times.push_back(seconds_since(t0));
        if (res.iterations != warm.iterations) row["iterations_varied"] = true;
      }
      medians[shapes[s]] = median(times);
      row["times_s"] = times;
      row["median_s"] = medians[shapes[s]];
    } catch (const Error& e) {
      ++errors;
      row["error"] = e.what();
    }
    rows.push_back(std::move(row));
  }

  double ratio = kInf;
  if (medians.count({512, 32}) && medians.count({512, 512}))
    ratio = medians[{512, 32}] / medians[{512, 512}];
  b.add("ratio", ratio < kScalingRatio,
        "median(512x32) / median(512x512) = " + fmt(ratio) + " (limit " + fmt(kScalingRatio) + ")");

  double slope = kInf;
  std::vector<double> ds, ts;
  for (Index dd : {64, 128, 256, 512})
    if (medians.count({dd, dd})) {
      ds.push_back(static_cast<double>(dd));
      ts.push_back(medians[{dd, dd}]);
    }
  if (ds.size() == 4) slope = log_log_slope(ds, ts);
  b.add("slope", slope <= kScalingSlope,
        "log-log slope over d in {64,128,256,512} = " + fmt(slope) + " (limit " +
            fmt(kScalingSlope) + ")");

  b.data()["shapes"] = std::move(rows);
  b.data()["reps"] = reps;
  b.data()["ratio"] = std::isfinite(ratio) ? json(ratio) : json(nullptr);
  b.data()["slope"] = std::isfinite(slope) ? json(slope) : json(nullptr);
  b.add_bounds(bounds, errors);
  b.add_runtime(600.0);
  return b.finish();
}

}  // namespace

bool SuiteResult::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

std::span<const std::string_view> suite_names() { return kSuites; }

SuiteResult run_suite(std::string_view name, const BenchOptions& opts) {
  if (opts.jobs < 1) throw ValidationError("jobs must be at least 1");
  if (name == "canonical") return canonical_suite(opts);
  if (name == "coop") return coop_suite(opts);
  if (name == "rotation") return rotation_suite(opts);
  if (name == "doubling") return doubling_suite(opts);
  if (name == "scaling") return scaling_suite(opts);
  if (name == "gradient") return gradient_suite(opts);
  if (name == "invariance") return invariance_suite(opts);
  std::string known;
  for (auto s : kSuites) known += (known.empty() ? "" : ", ") + std::string(s);
  throw ValidationError("unknown suite '" + std::string(name) + "' (expected one of " + known + ")");
}

json to_json(const SuiteResult& r) {
  json criteria = json::array();
  for (const auto& c : r.criteria)
    criteria.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"suite", r.suite},
          {"pass", r.passed()},
          {"seconds", r.seconds},
          {"criteria", std::move(criteria)},
          {"data", r.data}};
}

}  // namespace gpid

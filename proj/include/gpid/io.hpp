#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>

#include "gpid/errors.hpp"
#include "gpid/gauss_core.hpp"
#include "gpid/pid.hpp"
#include "gpid/synth.hpp"
#include "gpid/thin_pid.hpp"

namespace gpid {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kCovFormat = "gpid-cov-1";
inline constexpr std::string_view kReportFormat = "gpid-report-1";
inline constexpr std::string_view kSynthFormat = "gpid-synth-1";

// Filesystem failures; the CLI maps these to their own exit code.
class IoError : public Error {
 public:
  using Error::Error;
};

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// "x1_0,...,x1_{d1-1},x2_0,...,y_{dy-1}"
std::string samples_header(const BlockDims& dims);

void write_samples_csv(std::ostream& out, const SampleMatrix& samples);
void write_samples_csv(const std::filesystem::path& path, const SampleMatrix& samples);

// Block widths come from the header. When `expected` is given, a different
// layout is a ValidationError. Malformed cells name the 1-based line.
SampleMatrix read_samples_csv(std::istream& in, std::optional<BlockDims> expected = std::nullopt);
SampleMatrix read_samples_csv(const std::filesystem::path& path,
                              std::optional<BlockDims> expected = std::nullopt);

// {format, d1, d2, dy, mean, sigma (row-major), pairwise_only}
nlohmann::json covariance_to_json(const CovarianceModel& cov);
CovarianceModel covariance_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed, keys sorted, trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

struct SolverSummary {
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  double wall_ms = 0.0;
  double projected_grad_norm = 0.0;
};

struct PidReport {
  nlohmann::json input;  // {"kind": "samples"|"covariance"|"synth", ...}
  BlockDims dims;
  PidResult pid;  // in pid.unit
  SolverSummary solver;
};

nlohmann::json to_json(const PidReport& r);
PidReport pid_report_from_json(const nlohmann::json& j);

// {r, u1, u2, [s], total} in p.unit.
nlohmann::json pid_values_json(const PidResult& p);

// Sidecar written next to synthetic samples.
nlohmann::json synth_sidecar(const SynthSpec& spec, const SynthInstance& inst, Index n,
                             const std::optional<std::string>& samples_file, Unit unit);

}  // namespace gpid

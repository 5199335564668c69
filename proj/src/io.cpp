#include "gpid/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <vector>

namespace gpid {

namespace {

using Json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

// Parses the column names back into block widths.
BlockDims dims_from_header(const std::vector<std::string_view>& names) {
  const std::array<std::string_view, 3> prefixes{"x1_", "x2_", "y_"};
  std::array<Index, 3> counts{0, 0, 0};
  std::size_t block = 0;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string_view name = names[c];
    while (block < prefixes.size() && !name.starts_with(prefixes[block])) ++block;
    if (block == prefixes.size()) {
      throw ValidationError("bad header column " + std::to_string(c + 1) + " '" +
                            std::string(name) + "'");
    }
    const std::string_view digits = name.substr(prefixes[block].size());
    Index idx = -1;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || idx != counts[block]) {
      throw ValidationError("bad header column " + std::to_string(c + 1) + " '" +
                            std::string(name) + "': expected " + std::string(prefixes[block]) +
                            std::to_string(counts[block]));
    }
    ++counts[block];
  }
  const BlockDims dims{counts[0], counts[1], counts[2]};
  if (dims.d1 < 1 || dims.d2 < 1 || dims.dy < 1) {
    throw ValidationError("header must name at least one x1_, x2_ and y_ column");
  }
  return dims;
}

std::string dims_text(const BlockDims& d) {
  return std::to_string(d.d1) + "," + std::to_string(d.d2) + "," + std::to_string(d.dy);
}

Index get_dim(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    throw ValidationError(std::string("'") + key + "' must be a positive integer");
  }
  return static_cast<Index>(v.get<long long>());
}

std::vector<double> get_numbers(const Json& j, const char* key, std::size_t expected) {
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != expected) {
    throw ValidationError(std::string("'") + key + "' must be an array of " +
                          std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const Json& x : v) {
    if (!x.is_number()) throw ValidationError(std::string("'") + key + "' holds a non-number");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string samples_header(const BlockDims& dims) {
  std::string out;
  auto add = [&](std::string_view prefix, Index count) {
    for (Index i = 0; i < count; ++i) {
      if (!out.empty()) out += ',';
      out += prefix;
      out += std::to_string(i);
    }
  };
  add("x1_", dims.d1);
  add("x2_", dims.d2);
  add("y_", dims.dy);
  return out;
}

void write_samples_csv(std::ostream& out, const SampleMatrix& samples) {
  out << samples_header(samples.dims()) << '\n';
  const Matrix& v = samples.values();
  std::string line;
  for (Index i = 0; i < v.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < v.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_double(v(i, j));
    }
    line += '\n';
    out << line;
  }
}

void write_samples_csv(const std::filesystem::path& path, const SampleMatrix& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_samples_csv(out, samples);
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

SampleMatrix read_samples_csv(std::istream& in, std::optional<BlockDims> expected) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("samples file is empty (missing header)");
  const BlockDims dims = dims_from_header(split(line, ','));
  if (expected && !(*expected == dims)) {
    throw ValidationError("dimension mismatch: header has d1,d2,dy=" + dims_text(dims) +
                          " but " + dims_text(*expected) + " was requested");
  }
  const Index d = dims.total();
  std::vector<double> values;
  Index rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (static_cast<Index>(cells.size()) != d) {
      throw ValidationError("line " + std::to_string(line_no) + " (row " + std::to_string(rows) +
                            "): expected " + std::to_string(d) + " values, found " +
                            std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string_view cell = cells[c];
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ValidationError("line " + std::to_string(line_no) + " (row " +
                              std::to_string(rows) + "), column " + std::to_string(c) +
                              ": cannot parse '" + std::string(cell) + "'");
      }
      if (!std::isfinite(x)) {
        throw ValidationError("non-finite value at line " + std::to_string(line_no) + " (row " +
                              std::to_string(rows) + "), column " + std::to_string(c));
      }
      values.push_back(x);
    }
    ++rows;
  }
  if (in.bad()) throw IoError("read error in samples file");
  if (rows == 0) throw ValidationError("samples file has no data rows");
  Matrix m(rows, d);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = values[static_cast<std::size_t>(i * d + j)];
  }
  return SampleMatrix(dims, std::move(m));
}

SampleMatrix read_samples_csv(const std::filesystem::path& path,
                              std::optional<BlockDims> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_samples_csv(in, expected);
}

Json covariance_to_json(const CovarianceModel& cov) {
  const Index d = cov.dims().total();
  Json sigma = Json::array();
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) sigma.push_back(cov.sigma()(i, j));
  }
  Json mean = Json::array();
  for (Index i = 0; i < d; ++i) mean.push_back(cov.mean()(i));
  return {{"format", kCovFormat},
          {"d1", cov.dims().d1},
          {"d2", cov.dims().d2},
          {"dy", cov.dims().dy},
          {"mean", mean},
          {"sigma", sigma},
          {"pairwise_only", cov.pairwise_only()}};
}

CovarianceModel covariance_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw ValidationError("covariance file must hold a JSON object");
    if (!j.contains("format") || j.at("format") != kCovFormat) {
      throw ValidationError("covariance file must declare \"format\": \"" +
                            std::string(kCovFormat) + "\"");
    }
    const BlockDims dims{get_dim(j, "d1"), get_dim(j, "d2"), get_dim(j, "dy")};
    const Index d = dims.total();
    const std::size_t n = static_cast<std::size_t>(d);
    const std::vector<double> s = get_numbers(j, "sigma", n * n);
    Vector mean = Vector::Zero(d);
    if (j.contains("mean")) {
      const std::vector<double> m = get_numbers(j, "mean", n);
      for (Index i = 0; i < d; ++i) mean(i) = m[static_cast<std::size_t>(i)];
    }
    bool pairwise = false;
    if (j.contains("pairwise_only")) {
      if (!j.at("pairwise_only").is_boolean()) {
        throw ValidationError("'pairwise_only' must be a boolean");
      }
      pairwise = j.at("pairwise_only").get<bool>();
    }
    Matrix sigma(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) sigma(r, c) = s[static_cast<std::size_t>(r * d + c)];
    }
    return CovarianceModel(dims, std::move(mean), std::move(sigma), pairwise);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed covariance file: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Json pid_values_json(const PidResult& p) {
  Json out = {{"r", p.r}, {"u1", p.u1}, {"u2", p.u2}, {"total", p.total()}};
  if (p.s) out["s"] = *p.s;
  return out;
}

Json to_json(const PidReport& r) {
  const PidResult& p = r.pid;
  Json raw = {{"r", p.raw.r}, {"u1", p.raw.u1}, {"u2", p.raw.u2}};
  if (p.raw.s) raw["s"] = *p.raw.s;
  Json diag = {{"i1", p.i1},
               {"i2", p.i2},
               {"min_mi", p.min_mi},
               {"method", to_string(p.method)},
               {"raw", raw}};
  if (p.ip_total) diag["ip_total"] = *p.ip_total;
  return {{"input", r.input},
          {"dims", {{"d1", r.dims.d1}, {"d2", r.dims.d2}, {"dy", r.dims.dy}}},
          {"unit", to_string(p.unit)},
          {"pid", pid_values_json(p)},
          {"diagnostics", diag},
          {"solver",
           {{"iterations", r.solver.iterations},
            {"converged", r.solver.converged},
            {"stop_reason", r.solver.stop_reason},
            {"wall_ms", r.solver.wall_ms},
            {"projected_grad_norm", r.solver.projected_grad_norm}}},
          {"versions", {{"tool", kToolVersion}, {"format", kReportFormat}}}};
}

PidReport pid_report_from_json(const Json& j) {
  try {
    PidReport r;
    r.input = j.at("input");
    const Json& d = j.at("dims");
    r.dims = {d.at("d1").get<Index>(), d.at("d2").get<Index>(), d.at("dy").get<Index>()};
    PidResult& p = r.pid;
    p.unit = parse_unit(j.at("unit").get<std::string>());
    const Json& v = j.at("pid");
    p.r = v.at("r").get<double>();
    p.u1 = v.at("u1").get<double>();
    p.u2 = v.at("u2").get<double>();
    if (v.contains("s")) p.s = v.at("s").get<double>();
    const Json& diag = j.at("diagnostics");
    p.i1 = diag.at("i1").get<double>();
    p.i2 = diag.at("i2").get<double>();
    p.min_mi = diag.at("min_mi").get<double>();
    if (diag.contains("ip_total")) p.ip_total = diag.at("ip_total").get<double>();
    const std::string method = diag.at("method").get<std::string>();
    p.method = method == "mmi_oracle" ? PidMethod::mmi_oracle
               : method == "composed" ? PidMethod::composed
                                      : PidMethod::thin_pid;
    const Json& raw = diag.at("raw");
    p.raw.r = raw.at("r").get<double>();
    p.raw.u1 = raw.at("u1").get<double>();
    p.raw.u2 = raw.at("u2").get<double>();
    if (raw.contains("s")) p.raw.s = raw.at("s").get<double>();
    const Json& s = j.at("solver");
    r.solver.iterations = s.at("iterations").get<int>();
    r.solver.converged = s.at("converged").get<bool>();
    r.solver.stop_reason = s.at("stop_reason").get<std::string>();
    r.solver.wall_ms = s.at("wall_ms").get<double>();
    r.solver.projected_grad_norm = s.at("projected_grad_norm").get<double>();
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed PID report: ") + e.what());
  }
}

Json synth_sidecar(const SynthSpec& spec, const SynthInstance& inst, Index n,
                   const std::optional<std::string>& samples_file, Unit unit) {
  Json out = {{"format", kSynthFormat},
              {"spec", to_json(spec)},
              {"n", n},
              {"covariance", covariance_to_json(inst.cov)},
              {"oracle_kind", to_string(inst.oracle_kind)},
              {"unit", to_string(unit)},
              {"versions", {{"tool", kToolVersion}}}};
  out["samples"] = samples_file ? Json(*samples_file) : Json(nullptr);
  out["oracle"] = inst.oracle ? pid_values_json(to_unit(*inst.oracle, unit)) : Json(nullptr);
  return out;
}

}  // namespace gpid

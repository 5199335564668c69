#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <json.hpp>
#include <optional>
#include <string_view>
#include <variant>

#include "gpid/gauss_core.hpp"
#include "gpid/pid.hpp"

namespace gpid {

enum class CanonicalCase { uniq_red, uniq_syn, red_syn };

std::string_view to_string(CanonicalCase c);
CanonicalCase parse_canonical_case(std::string_view text);

struct SynthSpec;

namespace variant {

// Scalar Y ~ N(0,1) with one of three interaction patterns:
//   uniq_red: X1 = Y + n1 (Var 1),  X2 = X1 + n2 (Var sigma2)
//   uniq_syn: X1 = Y + n1,          X2 = n2       (Var sigma2 each, Corr rho)
//   red_syn:  X1 = Y + n1,          X2 = Y + n2   (Var sigma2 each, Corr rho)
struct Canonical1d {
  CanonicalCase which = CanonicalCase::red_syn;
  double sigma2 = 1.0;
  double rho = 0.0;
};

// Two independent scalar subsystems with gains (alpha, 1) on Y1 and (1, 3) on Y2.
struct CoopGain {
  double alpha = 1.0;
};

// X1 = diag(3, 1) R(theta) Y + n1, X2 = diag(1, 3) Y + n2, unit noises.
struct Rotation {
  double theta = 0.0;
};

// k independent copies of `base`, stacked blockwise.
struct Doubling {
  std::shared_ptr<const SynthSpec> base;
  int k = 1;
};

}  // namespace variant

struct SynthSpec {
  std::variant<variant::Canonical1d, variant::CoopGain, variant::Rotation, variant::Doubling> params;
  std::uint64_t seed = 0;

  // Throws ValidationError for out-of-range parameters.
  void validate() const;
};

enum class OracleKind { exact_mmi, additive_mmi, endpoint_only, none };

std::string_view to_string(OracleKind k);

struct SynthInstance {
  CovarianceModel cov;
  std::optional<PidResult> oracle;  // nats
  OracleKind oracle_kind = OracleKind::none;
};

// Exact joint covariance from the generative equations plus the closed-form oracle.
SynthInstance make_instance(const SynthSpec& spec);

// n draws of N(mean, cov) from the counter-based generator keyed by `seed`.
SampleMatrix sample_instance(const SynthInstance& inst, Index n, std::uint64_t seed);

enum class BlockTransform { identity, cube, cbrt };

BlockTransform parse_block_transform(std::string_view text);

// Elementwise per-block transform; transforms are ordered X1, X2, Y.
SampleMatrix transform_samples(const SampleMatrix& samples,
                               const std::array<BlockTransform, 3>& transforms);

// {"variant": ..., "params": {...}, "seed": ...}
nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace gpid

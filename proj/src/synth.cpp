#include "gpid/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gpid/errors.hpp"
#include "gpid/rng.hpp"

namespace gpid {

namespace {

using Json = nlohmann::json;

constexpr double kHalfPi = std::numbers::pi / 2.0;

// [X1; X2; Y] = mix * z with Cov(z) = latent.
CovarianceModel linear_model(BlockDims dims, const Matrix& mix, const Matrix& latent) {
  Matrix sigma = mix * latent * mix.transpose();
  sigma = 0.5 * (sigma + sigma.transpose());
  return CovarianceModel(dims, Vector::Zero(dims.total()), std::move(sigma));
}

// Correlated pair of noises with common variance.
Matrix noise_pair(double var, double rho) {
  Matrix c(2, 2);
  c << var, rho * var, rho * var, var;
  return c;
}

double half_log1p(double snr) { return 0.5 * std::log1p(snr); }

// Scalar subsystem with independent unit noises and gains g1, g2.
PidResult scalar_independent_oracle(double g1, double g2) {
  return mmi_pid(half_log1p(g1 * g1), half_log1p(g2 * g2), half_log1p(g1 * g1 + g2 * g2));
}

SynthInstance make_canonical(const variant::Canonical1d& c) {
  const BlockDims dims{1, 1, 1};
  // z = (Y, n1, n2)
  Matrix latent = Matrix::Zero(3, 3);
  latent(0, 0) = 1.0;
  Matrix mix = Matrix::Zero(3, 3);
  double i1 = 0.0;
  double i2 = 0.0;
  double ip = 0.0;
  const double s2 = c.sigma2;
  switch (c.which) {
    case CanonicalCase::uniq_red:
      latent(1, 1) = 1.0;
      latent(2, 2) = s2;
      mix << 1, 1, 0,   // X1 = Y + n1
          1, 1, 1,      // X2 = X1 + n2
          1, 0, 0;      // Y
      i1 = half_log1p(1.0);
      i2 = half_log1p(1.0 / (1.0 + s2));
      ip = i1;  // Y - X1 - X2 is a Markov chain
      break;
    case CanonicalCase::uniq_syn:
      latent.bottomRightCorner(2, 2) = noise_pair(s2, c.rho);
      mix << 1, 1, 0,  // X1 = Y + n1
          0, 0, 1,     // X2 = n2
          1, 0, 0;
      i1 = half_log1p(1.0 / s2);
      i2 = 0.0;
      // X1 - rho * X2 = Y + (n1 - rho n2), noise variance s2 (1 - rho^2)
      ip = half_log1p(1.0 / (s2 * (1.0 - c.rho * c.rho)));
      break;
    case CanonicalCase::red_syn:
      latent.bottomRightCorner(2, 2) = noise_pair(s2, c.rho);
      mix << 1, 1, 0,  // X1 = Y + n1
          1, 0, 1,     // X2 = Y + n2
          1, 0, 0;
      i1 = half_log1p(1.0 / s2);
      i2 = i1;
      // X1 + X2 is sufficient: 2Y + (n1 + n2), noise variance 2 s2 (1 + rho)
      ip = half_log1p(2.0 / (s2 * (1.0 + c.rho)));
      break;
  }
  return SynthInstance{linear_model(dims, mix, latent), mmi_pid(i1, i2, ip),
                       OracleKind::exact_mmi};
}

SynthInstance make_coop(const variant::CoopGain& c) {
  const BlockDims dims{2, 2, 2};
  // z = (Y1, Y2, n11, n12, n21, n22), all i.i.d. N(0, 1)
  Matrix mix = Matrix::Zero(6, 6);
  mix(0, 0) = c.alpha;  // X11 = alpha Y1 + n11
  mix(0, 2) = 1.0;
  mix(1, 1) = 1.0;  // X12 = Y2 + n12
  mix(1, 3) = 1.0;
  mix(2, 0) = 1.0;  // X21 = Y1 + n21
  mix(2, 4) = 1.0;
  mix(3, 1) = 3.0;  // X22 = 3 Y2 + n22
  mix(3, 5) = 1.0;
  mix(4, 0) = 1.0;
  mix(5, 1) = 1.0;
  const std::array<PidResult, 2> parts{scalar_independent_oracle(c.alpha, 1.0),
                                       scalar_independent_oracle(1.0, 3.0)};
  return SynthInstance{linear_model(dims, mix, Matrix::Identity(6, 6)), compose_additive(parts),
                       OracleKind::additive_mmi};
}

SynthInstance make_rotation(const variant::Rotation& r) {
  const BlockDims dims{2, 2, 2};
  Matrix rot(2, 2);
  rot << std::cos(r.theta), -std::sin(r.theta), std::sin(r.theta), std::cos(r.theta);
  const Matrix h1 = Vector((Vector(2) << 3.0, 1.0).finished()).asDiagonal() * rot;
  const Matrix h2 = Vector((Vector(2) << 1.0, 3.0).finished()).asDiagonal();
  // z = (Y1, Y2, n11, n12, n21, n22)
  Matrix mix = Matrix::Zero(6, 6);
  mix.block(0, 0, 2, 2) = h1;
  mix.block(0, 2, 2, 2).setIdentity();
  mix.block(2, 0, 2, 2) = h2;
  mix.block(2, 4, 2, 2).setIdentity();
  mix.block(4, 0, 2, 2).setIdentity();

  SynthInstance inst{linear_model(dims, mix, Matrix::Identity(6, 6)), std::nullopt,
                     OracleKind::endpoint_only};
  // At the endpoints the system splits into two scalar subsystems, one per Y_j.
  if (r.theta == 0.0) {
    const std::array<PidResult, 2> parts{scalar_independent_oracle(3.0, 1.0),
                                         scalar_independent_oracle(1.0, 3.0)};
    inst.oracle = compose_additive(parts);
  } else if (std::abs(r.theta - kHalfPi) < 1e-15) {
    // X1 = (-3 Y2, Y1) + n1: Y1 reaches both receivers with gain 1, Y2 with gain 3.
    const std::array<PidResult, 2> parts{scalar_independent_oracle(1.0, 1.0),
                                         scalar_independent_oracle(3.0, 3.0)};
    inst.oracle = compose_additive(parts);
  }
  return inst;
}

SynthInstance make_doubling(const variant::Doubling& d) {
  const SynthInstance base = make_instance(*d.base);
  const BlockDims b = base.cov.dims();
  const int k = d.k;
  const BlockDims dims{b.d1 * k, b.d2 * k, b.dy * k};
  auto place = [&](int copy, Index idx) -> Index {
    if (idx < b.d1) return copy * b.d1 + idx;
    if (idx < b.d1 + b.d2) return dims.d1 + copy * b.d2 + (idx - b.d1);
    return dims.d1 + dims.d2 + copy * b.dy + (idx - b.d1 - b.d2);
  };
  Matrix sigma = Matrix::Zero(dims.total(), dims.total());
  Vector mean = Vector::Zero(dims.total());
  for (int c = 0; c < k; ++c) {
    for (Index i = 0; i < b.total(); ++i) {
      mean(place(c, i)) = base.cov.mean()(i);
      for (Index j = 0; j < b.total(); ++j) sigma(place(c, i), place(c, j)) = base.cov.sigma()(i, j);
    }
  }
  SynthInstance inst{CovarianceModel(dims, std::move(mean), std::move(sigma)), std::nullopt,
                     OracleKind::none};
  if (base.oracle) {
    const std::vector<PidResult> parts(static_cast<std::size_t>(k), *base.oracle);
    inst.oracle = compose_additive(parts);
    inst.oracle_kind = OracleKind::additive_mmi;
  }
  return inst;
}

// std::cbrt plus one Newton step; libm results can be an ulp off on exact cubes.
double real_cbrt(double x) {
  const double y = std::cbrt(x);
  if (y == 0.0 || !std::isfinite(y)) return y;
  const double refined = y - (y * y * y - x) / (3.0 * y * y);
  return std::isfinite(refined) ? refined : y;
}

double cube(double x) { return x * x * x; }

}  // namespace

std::string_view to_string(CanonicalCase c) {
  switch (c) {
    case CanonicalCase::uniq_red:
      return "uniq_red";
    case CanonicalCase::uniq_syn:
      return "uniq_syn";
    case CanonicalCase::red_syn:
      return "red_syn";
  }
  return "unknown";
}

CanonicalCase parse_canonical_case(std::string_view text) {
  if (text == "uniq_red") return CanonicalCase::uniq_red;
  if (text == "uniq_syn") return CanonicalCase::uniq_syn;
  if (text == "red_syn") return CanonicalCase::red_syn;
  throw ValidationError("unknown canonical case '" + std::string(text) + "'");
}

std::string_view to_string(OracleKind k) {
  switch (k) {
    case OracleKind::exact_mmi:
      return "exact_mmi";
    case OracleKind::additive_mmi:
      return "additive_mmi";
    case OracleKind::endpoint_only:
      return "endpoint_only";
    case OracleKind::none:
      return "none";
  }
  return "unknown";
}

void SynthSpec::validate() const {
  struct Check {
    void operator()(const variant::Canonical1d& c) const {
      if (!(c.sigma2 > 0.0) || !std::isfinite(c.sigma2)) {
        throw ValidationError("sigma2 must be positive");
      }
      if (!(c.rho > -1.0 && c.rho < 1.0)) throw ValidationError("rho must lie in (-1, 1)");
    }
    void operator()(const variant::CoopGain& c) const {
      if (!std::isfinite(c.alpha)) throw ValidationError("alpha must be finite");
    }
    void operator()(const variant::Rotation& r) const {
      if (!(r.theta >= 0.0 && r.theta <= kHalfPi)) {
        throw ValidationError("theta must lie in [0, pi/2]");
      }
    }
    void operator()(const variant::Doubling& d) const {
      if (!d.base) throw ValidationError("doubling needs a base spec");
      if (d.k < 1 || (d.k & (d.k - 1)) != 0) {
        throw ValidationError("doubling factor k must be a power of two >= 1");
      }
      d.base->validate();
    }
  };
  std::visit(Check{}, params);
}

SynthInstance make_instance(const SynthSpec& spec) {
  spec.validate();
  struct Build {
    SynthInstance operator()(const variant::Canonical1d& c) const { return make_canonical(c); }
    SynthInstance operator()(const variant::CoopGain& c) const { return make_coop(c); }
    SynthInstance operator()(const variant::Rotation& r) const { return make_rotation(r); }
    SynthInstance operator()(const variant::Doubling& d) const { return make_doubling(d); }
  };
  return std::visit(Build{}, spec.params);
}

SampleMatrix sample_instance(const SynthInstance& inst, Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample count must be >= 1");
  const Matrix& sigma = inst.cov.sigma();
  const Index d = sigma.rows();
  const SpdFactor factor(psd_repair(sigma));
  const CounterRng rng(seed);
  Matrix z(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      z(i, j) = rng.normal(static_cast<std::uint64_t>(i * d + j));
    }
  }
  Matrix x = z * factor.lower().transpose();
  x.rowwise() += inst.cov.mean().transpose();
  return SampleMatrix(inst.cov.dims(), std::move(x));
}

BlockTransform parse_block_transform(std::string_view text) {
  if (text == "identity") return BlockTransform::identity;
  if (text == "cube") return BlockTransform::cube;
  if (text == "cbrt") return BlockTransform::cbrt;
  throw ValidationError("unknown transform '" + std::string(text) + "'");
}

SampleMatrix transform_samples(const SampleMatrix& samples,
                               const std::array<BlockTransform, 3>& transforms) {
  const BlockDims& dims = samples.dims();
  const std::array<std::pair<Index, Index>, 3> blocks{
      {{0, dims.d1}, {dims.d1, dims.d2}, {dims.d1 + dims.d2, dims.dy}}};
  Matrix out = samples.values();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto cols = out.middleCols(blocks[b].first, blocks[b].second);
    switch (transforms[b]) {
      case BlockTransform::identity:
        break;
      case BlockTransform::cube:
        cols = cols.unaryExpr(&cube);
        break;
      case BlockTransform::cbrt:
        cols = cols.unaryExpr(&real_cbrt);
        break;
    }
  }
  return SampleMatrix(dims, std::move(out));
}

Json to_json(const SynthSpec& spec) {
  struct Encode {
    Json operator()(const variant::Canonical1d& c) const {
      return {{"variant", "canonical1d"},
              {"params", {{"case", to_string(c.which)}, {"sigma2", c.sigma2}, {"rho", c.rho}}}};
    }
    Json operator()(const variant::CoopGain& c) const {
      return {{"variant", "coop_gain"}, {"params", {{"alpha", c.alpha}}}};
    }
    Json operator()(const variant::Rotation& r) const {
      return {{"variant", "rotation"}, {"params", {{"theta", r.theta}}}};
    }
    Json operator()(const variant::Doubling& d) const {
      Json base = to_json(*d.base);
      base.erase("seed");
      return {{"variant", "doubling"}, {"params", {{"base", base}, {"k", d.k}}}};
    }
  };
  Json j = std::visit(Encode{}, spec.params);
  j["seed"] = spec.seed;
  return j;
}

SynthSpec synth_spec_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw ValidationError("synth spec must be a JSON object");
    const std::string name = j.at("variant").get<std::string>();
    const Json params = j.value("params", Json::object());
    SynthSpec spec;
    spec.seed = j.value("seed", std::uint64_t{0});
    if (name == "canonical1d") {
      variant::Canonical1d c;
      c.which = parse_canonical_case(params.at("case").get<std::string>());
      c.sigma2 = params.value("sigma2", 1.0);
      c.rho = params.value("rho", 0.0);
      spec.params = c;
    } else if (name == "coop_gain") {
      spec.params = variant::CoopGain{params.at("alpha").get<double>()};
    } else if (name == "rotation") {
      spec.params = variant::Rotation{params.at("theta").get<double>()};
    } else if (name == "doubling") {
      variant::Doubling d;
      d.base = std::make_shared<const SynthSpec>(synth_spec_from_json(params.at("base")));
      d.k = params.at("k").get<int>();
      spec.params = d;
    } else {
      throw ValidationError("unknown synth variant '" + name + "'");
    }
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed synth spec: ") + e.what());
  }
}

}  // namespace gpid

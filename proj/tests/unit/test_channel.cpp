#include <catch_amalgamated.hpp>
#include <cmath>

#include "gpid/channel.hpp"
#include "gpid/errors.hpp"
#include "gpid/synth.hpp"
#include "gpid/thin_pid.hpp"
#include "support.hpp"

using namespace gpid;
using namespace gpid::test;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

// Joint covariance of (X1, X2, Y) with X_i = G_i Y + n_i, noise covariance `noise`
// (d1+d2 square) and Y covariance `sy`.
CovarianceModel linear_joint(const Matrix& g1, const Matrix& g2, const Matrix& sy,
                             const Matrix& noise, bool pairwise_only = false) {
  const Index d1 = g1.rows(), d2 = g2.rows(), dy = sy.rows();
  Matrix g(d1 + d2, dy);
  g << g1, g2;
  const Index n = d1 + d2 + dy;
  Matrix s(n, n);
  s.topLeftCorner(d1 + d2, d1 + d2) = g * sy * g.transpose() + noise;
  s.topRightCorner(d1 + d2, dy) = g * sy;
  s.bottomLeftCorner(dy, d1 + d2) = sy * g.transpose();
  s.bottomRightCorner(dy, dy) = sy;
  s = 0.5 * (s + s.transpose());
  return CovarianceModel({d1, d2, dy}, Vector::Zero(n), s, pairwise_only);
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Vector sorted_eigenvalues(const Matrix& m) {
  Vector e = Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues();
  std::sort(e.data(), e.data() + e.size());
  return e;
}

}  // namespace

TEST_CASE("unit-noise scalar channel is already whitened", "[reduce]") {
  const CovarianceModel cov =
      linear_joint(scalar(1), scalar(1), scalar(1), Matrix::Identity(2, 2));
  const BroadcastChannel ch = reduce_to_channel(cov);
  CHECK_THAT(ch.h1(0, 0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(ch.w1(0, 0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(ch.i1, WithinAbs(0.5 * std::log(2.0), 1e-14));
  REQUIRE(ch.ip_total.has_value());
  CHECK_THAT(*ch.ip_total, WithinAbs(0.5 * std::log(3.0), 1e-14));
}

TEST_CASE("whitening rescales the gain", "[reduce]") {
  Matrix noise = Matrix::Identity(2, 2);
  noise(0, 0) = 4.0;
  const BroadcastChannel ch = reduce_to_channel(linear_joint(scalar(2), scalar(1), scalar(1), noise));
  CHECK_THAT(ch.gain1(0, 0), WithinAbs(2.0, 1e-14));
  CHECK_THAT(ch.w1(0, 0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(ch.h1(0, 0), WithinAbs(1.0, 1e-14));
  CHECK_THAT(ch.h1(0, 0) * ch.h1(0, 0) * ch.sigma_y(0, 0), WithinAbs(1.0, 1e-14));
  CHECK_THAT(ch.i1, WithinAbs(0.5 * std::log(2.0), 1e-14));
}

TEST_CASE("gain uses the inverse Y covariance", "[reduce]") {
  // With Var(Y) = 4 the gain must stay 3; dropping the inverse would report 12.
  const BroadcastChannel ch =
      reduce_to_channel(linear_joint(scalar(3), scalar(1), scalar(4), Matrix::Identity(2, 2)));
  CHECK_THAT(ch.gain1(0, 0), WithinAbs(3.0, 1e-13));
  CHECK_THAT(ch.h1(0, 0), WithinAbs(3.0, 1e-13));
  CHECK_THAT(ch.sigma_y(0, 0), WithinAbs(4.0, 0.0));
  CHECK_THAT(ch.i1, WithinAbs(0.5 * std::log(37.0), 1e-13));
}

TEST_CASE("cooperative gain at alpha = 1 reduces to diagonal gains", "[reduce]") {
  const SynthInstance inst = make_instance(SynthSpec{variant::CoopGain{1.0}, 0});
  const BroadcastChannel ch = reduce_to_channel(inst.cov);
  Matrix h2 = Matrix::Identity(2, 2);
  h2(1, 1) = 3.0;
  CHECK(test::max_abs(ch.h1 - Matrix::Identity(2, 2)) < 1e-14);
  CHECK(test::max_abs(ch.h2 - h2) < 1e-14);
  CHECK(test::max_abs(ch.sigma_y - Matrix::Identity(2, 2)) < 1e-15);
}

TEST_CASE("reduction invariants on random joints", "[reduce][property]") {
  test::Rand rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const Index d1 = rng.integer(1, 6), d2 = rng.integer(1, 6), dy = rng.integer(1, 4);
    const Index n = d1 + d2 + dy;
    const CovarianceModel cov({d1, d2, dy}, Vector::Zero(n), rng.spd(n));
    const BroadcastChannel ch = reduce_to_channel(cov);

    // Implied whitened noise is the identity.
    const Matrix n1 = ch.w1 * (cov.sigma_x1() - ch.gain1 * cov.sigma_y() * ch.gain1.transpose()) *
                      ch.w1.transpose();
    const Matrix n2 = ch.w2 * (cov.sigma_x2() - ch.gain2 * cov.sigma_y() * ch.gain2.transpose()) *
                      ch.w2.transpose();
    CHECK(test::max_abs(n1 - Matrix::Identity(d1, d1)) < 1e-8);
    CHECK(test::max_abs(n2 - Matrix::Identity(d2, d2)) < 1e-8);

    // Marginal MI from the channel equals the MI of the raw pairwise block.
    CHECK_THAT(channel_marginal_mi(ch.h1, ch.sigma_y), WithinAbs(gaussian_mi(cov.pair_joint(1), d1), 1e-9));
    CHECK_THAT(channel_marginal_mi(ch.h2, ch.sigma_y), WithinAbs(gaussian_mi(cov.pair_joint(2), d2), 1e-9));
    CHECK(ch.i1 >= 0.0);
    CHECK(ch.i2 >= 0.0);
  }
}

TEST_CASE("reduction is invariant under linear maps of each modality", "[reduce][property]") {
  test::Rand rng(32);
  for (int trial = 0; trial < 15; ++trial) {
    const Index d1 = rng.integer(1, 5), d2 = rng.integer(1, 5), dy = rng.integer(1, 3);
    const Index n = d1 + d2 + dy;
    const Matrix s = rng.spd(n);
    const Matrix t = test::block_diag(rng.normal(d1, d1) + 2.5 * Matrix::Identity(d1, d1),
                                      rng.normal(d2, d2) + 2.5 * Matrix::Identity(d2, d2),
                                      Matrix::Identity(dy, dy));
    Matrix mapped = t * s * t.transpose();
    mapped = 0.5 * (mapped + mapped.transpose());
    const BroadcastChannel a = reduce_to_channel(CovarianceModel({d1, d2, dy}, Vector::Zero(n), s));
    const BroadcastChannel b = reduce_to_channel(CovarianceModel({d1, d2, dy}, Vector::Zero(n), mapped));
    CHECK_THAT(a.i1, WithinAbs(b.i1, 1e-9));
    CHECK_THAT(a.i2, WithinAbs(b.i2, 1e-9));
    const Vector ea1 = sorted_eigenvalues(a.h1 * a.sigma_y * a.h1.transpose());
    const Vector eb1 = sorted_eigenvalues(b.h1 * b.sigma_y * b.h1.transpose());
    const Vector ea2 = sorted_eigenvalues(a.h2 * a.sigma_y * a.h2.transpose());
    const Vector eb2 = sorted_eigenvalues(b.h2 * b.sigma_y * b.h2.transpose());
    CHECK((ea1 - eb1).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, ea1.maxCoeff()));
    CHECK((ea2 - eb2).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, ea2.maxCoeff()));
  }
}

TEST_CASE("sampled channel round trip recovers gain singular values", "[reduce][property]") {
  test::Rand rng(33);
  const Index d1 = 3, d2 = 2, dy = 2, n = 1'000'000;
  const Matrix h1 = rng.normal(d1, dy), h2 = rng.normal(d2, dy);
  Matrix v(n, d1 + d2 + dy);
  for (Index i = 0; i < n; ++i) {
    const Vector y = rng.normal(dy, 1);
    v.row(i) << (h1 * y + rng.normal(d1, 1)).transpose(), (h2 * y + rng.normal(d2, 1)).transpose(),
        y.transpose();
  }
  const BroadcastChannel ch = reduce_to_channel(estimate_covariance(SampleMatrix({d1, d2, dy}, v)));
  // Sigma_Y stays unwhitened, so compare the gains seen by a unit-covariance Y.
  const Matrix ly = Eigen::LLT<Matrix>(ch.sigma_y).matrixL();
  const Vector s1 = Eigen::JacobiSVD<Matrix>(ch.h1 * ly).singularValues();
  const Vector s2 = Eigen::JacobiSVD<Matrix>(ch.h2 * ly).singularValues();
  CHECK((s1 - Eigen::JacobiSVD<Matrix>(h1).singularValues()).cwiseAbs().maxCoeff() < 0.01);
  CHECK((s2 - Eigen::JacobiSVD<Matrix>(h2).singularValues()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("reduction errors", "[reduce]") {
  Matrix s = Matrix::Identity(3, 3);
  s(2, 2) = 0.0;
  try {
    reduce_to_channel(CovarianceModel({1, 1, 1}, Vector::Zero(3), s));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK_THAT(e.what(), ContainsSubstring("Sigma_Y"));
  }

  Matrix bad(3, 3);  // Var(X1) = 1 but Cov(X1, Y) = 2
  bad << 1, 0, 2, 0, 1, 0, 2, 0, 1;
  CHECK_THROWS_AS(reduce_to_channel(CovarianceModel({1, 1, 1}, Vector::Zero(3), bad, true)), ModelError);

  // Round-off sized indefiniteness is repaired: X1 = (Y, Y) + n1 with Cov(n1) = diag(1, -1e-11).
  Matrix tiny(4, 4);
  tiny << 2, 1, 1, 1,
          1, 1 - 1e-11, 1, 1,
          1, 1, 2, 1,
          1, 1, 1, 1;
  const BroadcastChannel ch = reduce_to_channel(CovarianceModel({2, 1, 1}, Vector::Zero(4), tiny, true));
  CHECK(ch.h1.allFinite());
  CHECK(std::isfinite(ch.i1));
  CHECK(ch.i1 > 5.0);

  // A scalar noise pushed below zero is a noiseless channel, not round-off.
  Matrix flat = linear_joint(scalar(1), scalar(1), scalar(1), Matrix::Identity(2, 2)).sigma();
  flat(0, 0) -= 1.0 + 1e-9;
  CHECK_THROWS_AS(reduce_to_channel(CovarianceModel({1, 1, 1}, Vector::Zero(3), flat, true)), Error);
}

TEST_CASE("pairwise-only models carry no total MI", "[reduce]") {
  test::Rand rng(34);
  const CovarianceModel cov({2, 2, 1}, Vector::Zero(5), rng.spd(5), true);
  const BroadcastChannel ch = reduce_to_channel(cov);
  CHECK_FALSE(ch.ip_total.has_value());
  CHECK_THROWS_AS(true_noise_cross_cov(cov, ch), ContractError);
}

TEST_CASE("true noise cross-covariance", "[cross]") {
  SECTION("conditionally independent modalities") {
    test::Rand rng(35);
    const CovarianceModel cov = linear_joint(rng.normal(3, 2), rng.normal(2, 2), rng.spd(2),
                                             test::block_diag(rng.spd(3), rng.spd(2), Matrix(0, 0)));
    const BroadcastChannel ch = reduce_to_channel(cov);
    CHECK(test::max_abs(true_noise_cross_cov(cov, ch).off) < 1e-12);
  }
  SECTION("correlated scalar noises") {
    for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9})
      for (double s2 : {0.25, 1.0, 4.0}) {
        const SynthInstance inst =
            make_instance(SynthSpec{variant::Canonical1d{CanonicalCase::red_syn, s2, rho}, 0});
        const BroadcastChannel ch = reduce_to_channel(inst.cov);
        CHECK_THAT(true_noise_cross_cov(inst.cov, ch).off(0, 0), WithinAbs(rho, 1e-13));
      }
  }
  SECTION("objective at the data's own coupling is twice the total MI") {
    test::Rand rng(36);
    for (int trial = 0; trial < 10; ++trial) {
      const CovarianceModel cov({4, 3, 2}, Vector::Zero(9), rng.spd(9));
      const BroadcastChannel ch = reduce_to_channel(cov);
      const NoiseCrossCov off = true_noise_cross_cov(cov, ch);
      CHECK(test::top_singular(off.off) <= 1.0 + 1e-6);
      const double direct = gaussian_mi(cov.sigma(), 7);
      CHECK_THAT(0.5 * objective(ch, off.off), WithinAbs(direct, 1e-9));
      CHECK_THAT(*ch.ip_total, WithinAbs(direct, 1e-9));
    }
  }
}

TEST_CASE("make_channel validates shapes", "[channel]") {
  CHECK_THROWS_AS(make_channel(Matrix::Ones(2, 2), Matrix::Ones(2, 3), Matrix::Identity(2, 2)),
                  ValidationError);
  const BroadcastChannel ch = make_channel(Matrix::Ones(2, 1), Matrix::Ones(1, 1), Matrix::Identity(1, 1));
  CHECK_THAT(ch.i1, WithinAbs(0.5 * std::log(3.0), 1e-14));
  CHECK(ch.w1 == Matrix::Identity(2, 2));
}

#include <catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "gpid/channel.hpp"
#include "gpid/errors.hpp"
#include "gpid/pid.hpp"
#include "gpid/synth.hpp"
#include "gpid/thin_pid.hpp"
#include "support.hpp"

using namespace gpid;
using namespace gpid::test;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

BroadcastChannel unit_scalar() { return make_channel(scalar(1), scalar(1), scalar(1)); }

BroadcastChannel random_channel(test::Rand& rng, Index d1, Index d2, Index dy) {
  return make_channel(rng.normal(d1, dy), rng.normal(d2, dy), rng.spd(dy, 0.25));
}

// logdet(G) - logdet(Sigma_n) straight from the definition, with explicit blocks.
double objective_by_definition(const BroadcastChannel& ch, const Matrix& s) {
  const Index d1 = ch.d1(), d2 = ch.d2(), d = d1 + d2;
  Matrix h(d, ch.dy());
  h << ch.h1, ch.h2;
  Matrix noise = Matrix::Identity(d, d);
  noise.topRightCorner(d1, d2) = s;
  noise.bottomLeftCorner(d2, d1) = s.transpose();
  const Matrix g = h * ch.sigma_y * h.transpose() + noise;
  return Eigen::PartialPivLU<Matrix>(g).determinant() > 0
             ? std::log(g.determinant()) - std::log(noise.determinant())
             : std::nan("");
}

Matrix finite_difference(const BroadcastChannel& ch, const Matrix& s, double h) {
  Matrix fd(s.rows(), s.cols());
  for (Index j = 0; j < s.cols(); ++j)
    for (Index i = 0; i < s.rows(); ++i) {
      Matrix p = s, m = s;
      p(i, j) += h;
      m(i, j) -= h;
      fd(i, j) = (objective(ch, p) - objective(ch, m)) / (2 * h);
    }
  return fd;
}

BroadcastChannel block_diagonal(const std::vector<BroadcastChannel>& parts) {
  Index d1 = 0, d2 = 0, dy = 0;
  for (const auto& p : parts) {
    d1 += p.d1();
    d2 += p.d2();
    dy += p.dy();
  }
  Matrix h1 = Matrix::Zero(d1, dy), h2 = Matrix::Zero(d2, dy), sy = Matrix::Zero(dy, dy);
  Index o1 = 0, o2 = 0, oy = 0;
  for (const auto& p : parts) {
    h1.block(o1, oy, p.d1(), p.dy()) = p.h1;
    h2.block(o2, oy, p.d2(), p.dy()) = p.h2;
    sy.block(oy, oy, p.dy(), p.dy()) = p.sigma_y;
    o1 += p.d1();
    o2 += p.d2();
    oy += p.dy();
  }
  return make_channel(h1, h2, sy);
}

}  // namespace

TEST_CASE("objective of a zero channel vanishes", "[objective]") {
  test::Rand rng(41);
  const BroadcastChannel ch = make_channel(Matrix::Zero(3, 2), Matrix::Zero(2, 2), rng.spd(2));
  for (int trial = 0; trial < 10; ++trial)
    CHECK_THAT(objective(ch, rng.with_norm(3, 2, rng.uniform(0.0, 0.99))), WithinAbs(0.0, 1e-12));
}

TEST_CASE("scalar objective by hand", "[objective]") {
  const BroadcastChannel ch = unit_scalar();
  CHECK_THAT(objective(ch, scalar(0.0)), WithinAbs(std::log(3.0), 1e-15));
  for (double s : {-0.9, -0.3, 0.4, 0.8})
    CHECK_THAT(objective(ch, scalar(s)), WithinAbs(std::log((4 - (1 + s) * (1 + s)) / (1 - s * s)), 1e-13));
}

TEST_CASE("scalar objective next to the boundary", "[objective]") {
  // det G = 4 - (1 + s)^2 and det Sigma_n = 1 - s^2 both vanish like 1 - s; the ratio tends to 2.
  const BroadcastChannel ch = unit_scalar();
  const long double s = 1.0L - 1e-9L;
  const long double expected = std::log((4.0L - (1.0L + s) * (1.0L + s)) / (1.0L - s * s));
  const double value = objective(ch, scalar(static_cast<double>(s)));
  CHECK(std::isfinite(value));
  CHECK_THAT(value, WithinAbs(static_cast<double>(expected), 1e-9));
  CHECK_THAT(value, WithinAbs(std::log(2.0), 1e-9));
}

TEST_CASE("objective matches the definition on random channels", "[objective][property]") {
  test::Rand rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const BroadcastChannel ch = random_channel(rng, rng.integer(1, 5), rng.integer(1, 5), rng.integer(1, 3));
    const Matrix s = rng.with_norm(ch.d1(), ch.d2(), rng.uniform(0.0, 0.95));
    CHECK_THAT(objective(ch, s), WithinAbs(objective_by_definition(ch, s), 1e-9));
  }
}

TEST_CASE("infeasible couplings are rejected", "[objective]") {
  const BroadcastChannel ch = unit_scalar();
  CHECK_THROWS_AS(objective(ch, scalar(1.0)), DomainError);
  CHECK_THROWS_AS(objective(ch, scalar(-1.5)), DomainError);
  CHECK_THROWS_AS(gradient(ch, scalar(1.0)), DomainError);
  CHECK_THROWS_AS(objective(ch, scalar(std::nan(""))), DomainError);
  CHECK_THROWS_AS(objective(ch, Matrix::Zero(2, 1)), ValidationError);
}

TEST_CASE("gradient closed forms", "[gradient]") {
  test::Rand rng(43);
  const BroadcastChannel zero = make_channel(Matrix::Zero(3, 2), Matrix::Zero(4, 2), rng.spd(2));
  for (int trial = 0; trial < 5; ++trial)
    CHECK(test::max_abs(gradient(zero, rng.with_norm(3, 4, rng.uniform(0.0, 0.99)))) < 1e-12);

  CHECK_THAT(gradient(unit_scalar(), scalar(0.0))(0, 0), WithinAbs(-1.0 / 3.0, 1e-15));
}

TEST_CASE("twice the gradient matches central differences", "[gradient][property]") {
  test::Rand rng(44);
  const BroadcastChannel ch = random_channel(rng, 3, 2, 2);
  for (int point = 0; point < 20; ++point) {
    const Matrix s = rng.with_norm(3, 2, rng.uniform(0.05, 0.95));
    const Matrix g2 = 2.0 * gradient(ch, s);
    const Matrix fd = finite_difference(ch, s, 1e-6);
    CHECK((fd - g2).norm() / g2.norm() < 1e-5);
  }
}

TEST_CASE("solver gradient agrees with the block formula", "[gradient][property]") {
  test::Rand rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    const BroadcastChannel ch = random_channel(rng, rng.integer(1, 8), rng.integer(1, 8), rng.integer(1, 4));
    const ThinPidProblem problem(ch);
    const Matrix s = rng.with_norm(ch.d1(), ch.d2(), rng.uniform(0.0, 0.999));
    const ThinPidProblem::Evaluation e = problem.evaluate(s);
    const Matrix block = gradient(ch, s);
    CHECK((e.gradient - block).norm() <= 1e-8 * std::max(1.0, block.norm()));
    CHECK_THAT(e.objective, WithinAbs(objective(ch, s), 1e-10));
  }
}

TEST_CASE("projection", "[project]") {
  constexpr double eps = 1e-9;
  test::Rand rng(46);
  SECTION("interior points are returned as given") {
    const Matrix m = rng.with_norm(4, 3, 0.7);
    CHECK(test::max_abs(project(m, eps) - m) < 1e-12);
  }
  SECTION("scalar clamp") {
    CHECK_THAT(project(scalar(2.0), eps)(0, 0), WithinAbs(1.0 - eps, 1e-16));
    CHECK_THAT(project(scalar(-2.0), eps)(0, 0), WithinAbs(-(1.0 - eps), 1e-16));
  }
  SECTION("clamp distance equals the singular-value arithmetic") {
    for (int trial = 0; trial < 10; ++trial) {
      const Matrix m = rng.with_norm(5, 3, 3.0);
      const Matrix p = project(m, eps);
      const Vector sv = Eigen::JacobiSVD<Matrix>(m).singularValues();
      double dist2 = 0.0;
      for (Index i = 0; i < sv.size(); ++i) {
        const double clamped = std::min(std::max(sv(i), 0.0), 1.0 - eps);
        dist2 += (sv(i) - clamped) * (sv(i) - clamped);
      }
      CHECK_THAT(test::top_singular(p), WithinAbs(1.0 - eps, 1e-12));
      CHECK_THAT((m - p).squaredNorm(), WithinRel(dist2, 1e-9));
      const Vector sp = Eigen::JacobiSVD<Matrix>(p).singularValues();
      CHECK(((sp - sv).array() <= 1e-12).all());
      CHECK(test::max_abs(project(p, eps) - p) < 1e-12);
    }
  }
  SECTION("far outside inputs land on the cap") {
    const Matrix m = rng.with_norm(6, 6, 1e6);
    CHECK_THAT(test::top_singular(project(m, eps)), WithinAbs(1.0 - eps, 1e-12));
  }
  SECTION("non-finite input") {
    CHECK_THROWS_AS(project(scalar(std::nan("")), eps), DomainError);
  }
}

TEST_CASE("initialization", "[init]") {
  constexpr double eps = 1e-9;
  CHECK_THAT(init_sigma(unit_scalar(), eps)(0, 0), WithinAbs(1.0 - eps, 1e-16));
  const BroadcastChannel blind = make_channel(Matrix::Ones(2, 2), Matrix::Zero(3, 2), Matrix::Identity(2, 2));
  CHECK(init_sigma(blind, eps) == Matrix::Zero(2, 3));

  Matrix h1 = Matrix::Zero(2, 2), h2 = Matrix::Zero(2, 2);
  h1.diagonal() << 3, 1;
  h2.diagonal() << 1, 3;
  const Matrix s = init_sigma(make_channel(h1, h2, Matrix::Identity(2, 2)), eps);
  Matrix expected = Matrix::Zero(2, 2);
  expected.diagonal() << 1 - eps, 1.0 / 3.0;
  CHECK(test::max_abs(s - expected) < 1e-12);
}

TEST_CASE("zero channel converges immediately", "[solve]") {
  const BroadcastChannel ch = make_channel(Matrix::Zero(2, 1), Matrix::Zero(3, 1), scalar(1));
  const SolverResult res = solve(ch);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.min_mi == 0.0);
}

TEST_CASE("scalar redundant-synergistic instance meets the MMI value", "[solve]") {
  for (double rho : {-0.5, 0.0, 0.5}) {
    const SynthInstance inst = make_instance(SynthSpec{variant::Canonical1d{CanonicalCase::red_syn, 1.0, rho}, 0});
    const BroadcastChannel ch = reduce_to_channel(inst.cov);
    const SolverResult res = solve(ch);
    REQUIRE(res.converged);
    // Both routes: max(I1, I2) directly and I1 + I2 - R with the MMI redundancy.
    CHECK_THAT(res.min_mi, WithinAbs(0.5 * std::log(2.0), 1e-8));
    CHECK_THAT(res.min_mi, WithinAbs(ch.i1 + ch.i2 - std::min(ch.i1, ch.i2), 1e-8));
  }
}

TEST_CASE("cooperative gain minimum is the per-subsystem sum", "[solve]") {
  const SynthInstance inst = make_instance(SynthSpec{variant::CoopGain{1.0}, 0});
  const SolverResult res = solve(reduce_to_channel(inst.cov));
  REQUIRE(res.converged);
  const double sub1 = 0.5 * std::log(2.0);   // gains 1 and 1
  const double sub2 = 0.5 * std::log(10.0);  // gains 1 and 3
  CHECK_THAT(res.min_mi, WithinAbs(sub1 + sub2, 1e-8));
}

TEST_CASE("solver minimum against an exhaustive grid", "[solve]") {
  Matrix h1 = Matrix::Zero(2, 2), h2 = Matrix::Zero(2, 2);
  h1.diagonal() << 2.0, 1.0;
  h2.diagonal() << 1.0, 0.5;
  const BroadcastChannel ch = make_channel(h1, h2, Matrix::Identity(2, 2));
  const double cap = 1.0 - SolverConfig{}.sv_eps;

  double grid_min = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= 200; ++a)
    for (int b = 0; b <= 200; ++b) {
      Matrix s = Matrix::Zero(2, 2);
      s(0, 0) = -cap + a * (2 * cap / 200);
      s(1, 1) = -cap + b * (2 * cap / 200);
      grid_min = std::min(grid_min, objective(ch, s));
    }
  const SolverResult res = solve(ch);
  REQUIRE(res.converged);
  CHECK(res.objective <= grid_min + 1e-12);
  CHECK(grid_min - res.objective < 1e-3);
  CHECK(test::max_abs(res.sigma_off_star - 0.5 * Matrix::Identity(2, 2)) < 1e-6);
}

TEST_CASE("scalar minimum equals the MMI value across a grid", "[solve][property]") {
  for (CanonicalCase c : {CanonicalCase::uniq_red, CanonicalCase::uniq_syn, CanonicalCase::red_syn})
    for (double s2 : {0.25, 0.5, 1.0, 2.0, 4.0})
      for (double rho : {-0.9, -0.5, 0.0, 0.5, 0.9}) {
        const SynthInstance inst = make_instance(SynthSpec{variant::Canonical1d{c, s2, rho}, 0});
        const BroadcastChannel ch = reduce_to_channel(inst.cov);
        const SolverResult res = solve(ch);
        CHECK(res.converged);
        CHECK_THAT(res.min_mi, WithinAbs(ch.i1 + ch.i2 - std::min(ch.i1, ch.i2), 1e-8));
      }
}

TEST_CASE("solver invariants on random channels", "[solve][property]") {
  test::Rand rng(47);
  SolverConfig cfg;
  cfg.track_feasibility = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Index d1 = rng.integer(1, 10), d2 = rng.integer(1, 10), dy = rng.integer(1, 4);
    const Index n = d1 + d2 + dy;
    const CovarianceModel cov({d1, d2, dy}, Vector::Zero(n), rng.spd(n));
    const BroadcastChannel ch = reduce_to_channel(cov);
    const SolverResult res = solve(ch, cfg);
    REQUIRE(res.converged);
    REQUIRE(res.max_iterate_norm.has_value());
    CHECK(*res.max_iterate_norm <= 1.0 - cfg.sv_eps + 1e-12);
    CHECK(test::top_singular(res.sigma_off_star) <= 1.0 - cfg.sv_eps + 1e-12);
    CHECK(res.objective <= res.initial_objective + 1e-12);
    CHECK(res.min_mi >= std::max(ch.i1, ch.i2) - 1e-7);
    CHECK(res.min_mi <= ch.i1 + ch.i2 + 1e-7);
    CHECK(res.min_mi <= *ch.ip_total + 1e-7);
    for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
    CHECK_THAT(res.min_mi, WithinAbs(0.5 * objective(ch, res.sigma_off_star), 1e-12));
  }
}

TEST_CASE("minimum is additive over independent sub-channels", "[solve][property]") {
  test::Rand rng(48);
  for (int k : {2, 4, 8}) {
    std::vector<BroadcastChannel> parts;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      parts.push_back(random_channel(rng, rng.integer(1, 3), rng.integer(1, 3), rng.integer(1, 2)));
      const SolverResult r = solve(parts.back());
      REQUIRE(r.converged);
      sum += r.min_mi;
    }
    const SolverResult whole = solve(block_diagonal(parts));
    REQUIRE(whole.converged);
    CHECK_THAT(whole.min_mi, WithinAbs(sum, 1e-7 * k));
  }
}

TEST_CASE("swapping the modalities leaves the minimum unchanged", "[solve][property]") {
  test::Rand rng(49);
  for (int trial = 0; trial < 10; ++trial) {
    const BroadcastChannel ch = random_channel(rng, rng.integer(1, 7), rng.integer(1, 7), rng.integer(1, 3));
    const BroadcastChannel sw = make_channel(ch.h2, ch.h1, ch.sigma_y);
    const SolverResult a = solve(ch), b = solve(sw);
    CHECK_THAT(a.min_mi, WithinAbs(b.min_mi, 1e-9));
  }
}

TEST_CASE("solves are deterministic", "[solve]") {
  test::Rand rng(50);
  const BroadcastChannel ch = random_channel(rng, 6, 4, 2);
  const SolverResult a = solve(ch), b = solve(ch);
  CHECK(a.trace == b.trace);
  CHECK(a.sigma_off_star == b.sigma_off_star);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("iteration cap reports non-convergence", "[solve]") {
  test::Rand rng(51);
  const BroadcastChannel ch = random_channel(rng, 5, 4, 2);
  SolverConfig cfg;
  cfg.max_iters = 3;
  const SolverResult res = solve(ch, cfg);
  CHECK_FALSE(res.converged);
  CHECK(res.reason == StopReason::max_iters);
  CHECK(res.iterations == 3);
  CHECK_THROWS_AS(pid_from_solution(ch, res), ContractError);
  CHECK_NOTHROW(pid_from_solution(ch, res, Unit::nats, true));
}

TEST_CASE("trace length is capped", "[solve]") {
  test::Rand rng(52);
  SolverConfig cfg;
  cfg.trace_cap = 5;
  const SolverResult res = solve(random_channel(rng, 4, 4, 2), cfg);
  CHECK(res.trace.size() <= 5);
  CHECK_THAT(res.trace.back(), WithinAbs(res.objective, 1e-15));
}

TEST_CASE("config validation", "[config]") {
  auto bad = [](auto edit) {
    SolverConfig c;
    edit(c);
    return c;
  };
  CHECK_NOTHROW(SolverConfig{}.validate());
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.eta0 = 0; }).validate(), ValidationError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.alpha = 1.5; }).validate(), ValidationError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.beta = 1.0; }).validate(), ValidationError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.sv_eps = 0.0; }).validate(), ValidationError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.sv_eps = 1e-2; }).validate(), ValidationError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.max_iters = -1; }).validate(), ValidationError);
  CHECK_THROWS_AS(solve(unit_scalar(), bad([](SolverConfig& c) { c.beta = 0.0; })), ValidationError);
}

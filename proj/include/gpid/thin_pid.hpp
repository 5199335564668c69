#pragma once

#include <Eigen/Cholesky>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "gpid/channel.hpp"
#include "gpid/gauss_core.hpp"

namespace gpid {

// Projected RProp settings for the least-favorable-noise problem.
struct SolverConfig {
  double eta0 = 1e-3;      // initial per-element step
  // Reject steps that raise the objective; the iterate stays put and every step size shrinks by beta.
  bool monotone = true;
  double alpha = 0.999;    // step decay base, the step at iteration j is alpha^j * eta
  double beta = 0.9;       // step shrink on a gradient sign flip (grow by 1/beta on agreement)
  int max_iters = 50000;
  double obj_tol = 1e-12;   // relative objective change, held over a 10-iteration window
  double grad_tol = 1e-10;  // max-abs projected gradient
  double sv_eps = 1e-9;     // singular values are capped at 1 - sv_eps
  std::size_t trace_cap = 100000;
  // Computes the spectral norm of every iterate (one extra eigensolve per step).
  bool track_feasibility = false;

  // Throws ValidationError on out-of-range fields.
  void validate() const;
};

enum class StopReason { gradient_small, objective_stalled, max_iters };

std::string_view to_string(StopReason r);

struct SolverResult {
  Matrix sigma_off_star;          // d1 x d2 optimizer
  double min_mi = 0.0;            // 0.5 * objective at the optimizer, nats
  double objective = 0.0;         // L at the optimizer (no 1/2)
  double initial_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  StopReason reason = StopReason::max_iters;
  double projected_grad_norm = 0.0;
  std::vector<double> trace;               // L per iteration; last slot tracks the latest value once full
  std::optional<double> max_iterate_norm;  // only with track_feasibility
};

// Per-channel constants of the objective. With F_i = H_i chol(Sigma_Y),
// Q = I - S^T S, R = S^T F1 - F2 and Z = Q^{-1} R,
//   L = log|I + F^T Sigma_n^{-1} F| = log|I + F1^T F1 + R^T Z|,
// which equals log|G| - log|Sigma_n| but stays accurate as ||S|| -> 1.
// The block-inverse gradient -G11^{-1} G12 B^{-1} + S Q^{-1} equals
// (F1 + S Z) A^{-1} Z^T with A the matrix inside the log-determinant.
class ThinPidProblem {
 public:
  ThinPidProblem(const Matrix& h1, const Matrix& h2, const Matrix& sigma_y);
  explicit ThinPidProblem(const BroadcastChannel& ch)
      : ThinPidProblem(ch.h1, ch.h2, ch.sigma_y) {}

  struct Evaluation {
    double objective = 0.0;
    Matrix gradient;
  };

  Index d1() const { return d1_; }
  Index d2() const { return d2_; }

  // DomainError when sigma_off is not strictly inside the unit ball.
  double objective(const Matrix& sigma_off) const;
  Evaluation evaluate(const Matrix& sigma_off) const;

 private:
  Evaluation evaluate_impl(const Matrix& sigma_off, bool with_gradient) const;

  Index d1_;
  Index d2_;
  Matrix f1_;    // d1 x dy
  Matrix f2_;    // d2 x dy
  Matrix base_;  // I + F1^T F1
};

// Mutable optimizer state. Owned by a single solve() call.
struct SolverState {
  Matrix sigma_off;
  Matrix eta;
  Matrix prev_sign;
  int iter = 0;
};

double objective(const BroadcastChannel& ch, const Matrix& sigma_off);

// -G11^{-1} G12 B^{-1} + S (I - S^T S)^{-1} with G11 = H1 Sy H1^T + I,
// G12 = H1 Sy H2^T + S, B = G22 - G12^T G11^{-1} G12, all through Cholesky solves.
// This is half the derivative of the objective.
Matrix gradient(const BroadcastChannel& ch, const Matrix& sigma_off);

// Clamps singular values to [0, 1 - sv_eps]. Inputs already inside are returned untouched.
Matrix project(const Matrix& m, double sv_eps);

// H1 * pinv(H2), projected to the feasible set.
Matrix init_sigma(const BroadcastChannel& ch, double sv_eps = SolverConfig{}.sv_eps);

// Minimizes I_q(X1,X2;Y) over feasible noise couplings.
SolverResult solve(const BroadcastChannel& ch, const SolverConfig& cfg = {});

// Largest singular value.
double spectral_norm(const Matrix& m);

}  // namespace gpid

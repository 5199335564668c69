#include "gpid/thin_pid.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <string>

#include "gpid/errors.hpp"

namespace gpid {

namespace {

constexpr int kStallWindow = 10;

struct Projection {
  Matrix value;
  bool active = false;
};

// Thin SVD through the Gram matrix of the narrow side: for M = U S V^T,
// M^T M = V S^2 V^T, and clamping only touches the directions above the cap.
Projection project_impl(const Matrix& m, double sv_eps) {
  if (!m.allFinite()) throw DomainError("cannot project a matrix with non-finite entries");
  const double cap = 1.0 - sv_eps;
  if (m.size() == 0) return {m, false};
  if (m.rows() < m.cols()) {
    Projection t = project_impl(m.transpose(), sv_eps);
    return {t.value.transpose(), t.active};
  }
  const Index k = m.cols();
  Matrix cur = m;
  bool active = false;
  // A far-outside input loses about eps * ||m|| absolute accuracy in the
  // subtraction below, so the clamp is repeated on its own output until the
  // result is strictly inside.
  for (int pass = 0; pass < 4; ++pass) {
    Matrix gram = Matrix::Zero(k, k);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(cur.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    Matrix slack = -gram;
    slack.diagonal().array() += cap * cap;
    Eigen::LLT<Matrix> inside(slack);
    if (inside.info() == Eigen::Success) return {cur, active};

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in projection");
    const Vector sv = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Vector shrink = Vector::Zero(k);
    bool any = false;
    for (Index i = 0; i < k; ++i) {
      if (sv(i) > cap) {
        shrink(i) = 1.0 - cap / sv(i);
        any = true;
      }
    }
    if (!any) return {cur, active};
    const Matrix& v = eig.eigenvectors();
    cur -= (cur * v) * shrink.asDiagonal() * v.transpose();
    active = true;
  }
  return {cur, active};
}

Matrix sign_of(const Matrix& g) {
  return g.unaryExpr([](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

double projected_gradient_norm(const Matrix& s, const Matrix& grad, bool on_boundary,
                               double sv_eps) {
  if (grad.size() == 0) return 0.0;
  if (!on_boundary) return grad.cwiseAbs().maxCoeff();
  const Matrix moved = project_impl(s - grad, sv_eps).value;
  return (s - moved).cwiseAbs().maxCoeff();
}

}  // namespace

void SolverConfig::validate() const {
  if (!(eta0 > 0.0)) throw ValidationError("eta0 must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in (0, 1]");
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("beta must lie in (0, 1)");
  if (max_iters < 0) throw ValidationError("max_iters must be non-negative");
  if (!(obj_tol >= 0.0) || !(grad_tol >= 0.0)) throw ValidationError("tolerances must be >= 0");
  if (!(sv_eps > 0.0 && sv_eps < 1e-3)) throw ValidationError("sv_eps must lie in (0, 1e-3)");
  if (trace_cap < 1) throw ValidationError("trace_cap must be >= 1");
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::gradient_small:
      return "gradient_small";
    case StopReason::objective_stalled:
      return "objective_stalled";
    case StopReason::max_iters:
      return "max_iters";
  }
  return "unknown";
}

ThinPidProblem::ThinPidProblem(const Matrix& h1, const Matrix& h2, const Matrix& sigma_y)
    : d1_(h1.rows()), d2_(h2.rows()) {
  if (h1.cols() != sigma_y.rows() || h2.cols() != sigma_y.rows()) {
    throw ValidationError("channel gains and sigma_y have mismatched dimensions");
  }
  Eigen::LLT<Matrix> sy(sigma_y);
  if (sy.info() != Eigen::Success) throw NumericalError("Sigma_Y is not positive definite");
  const Matrix ly = sy.matrixL();
  f1_ = h1 * ly;
  f2_ = h2 * ly;
  base_ = Matrix::Identity(ly.rows(), ly.rows());
  base_.selfadjointView<Eigen::Lower>().rankUpdate(f1_.transpose());
  base_.triangularView<Eigen::StrictlyUpper>() = base_.transpose();
}

ThinPidProblem::Evaluation ThinPidProblem::evaluate_impl(const Matrix& s,
                                                         bool with_gradient) const {
  if (s.rows() != d1_ || s.cols() != d2_) {
    throw ValidationError("sigma_off must be " + std::to_string(d1_) + "x" + std::to_string(d2_));
  }
  if (!s.allFinite()) throw DomainError("sigma_off has non-finite entries");

  Matrix q = Matrix::Identity(d2_, d2_);
  q.selfadjointView<Eigen::Lower>().rankUpdate(s.transpose(), -1.0);
  q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
  Eigen::LLT<Matrix> q_llt(q);
  if (q_llt.info() != Eigen::Success) {
    throw DomainError("sigma_off is infeasible: spectral norm is not below 1");
  }

  const Matrix r = s.transpose() * f1_ - f2_;
  const Matrix z = q_llt.solve(r);
  Matrix a = base_ + r.transpose() * z;
  a = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> a_llt(a);
  if (a_llt.info() != Eigen::Success) {
    throw DomainError("objective matrix is numerically singular; project sigma_off first");
  }

  Evaluation out;
  out.objective = 2.0 * a_llt.matrixLLT().diagonal().array().log().sum();
  if (with_gradient) {
    const Matrix p1 = f1_ + s * z;
    out.gradient = p1 * a_llt.solve(z.transpose());
  }
  return out;
}

double ThinPidProblem::objective(const Matrix& sigma_off) const {
  return evaluate_impl(sigma_off, false).objective;
}

ThinPidProblem::Evaluation ThinPidProblem::evaluate(const Matrix& sigma_off) const {
  return evaluate_impl(sigma_off, true);
}

double objective(const BroadcastChannel& ch, const Matrix& sigma_off) {
  return ThinPidProblem(ch).objective(sigma_off);
}

Matrix gradient(const BroadcastChannel& ch, const Matrix& s) {
  const Index d1 = ch.d1();
  const Index d2 = ch.d2();
  if (s.rows() != d1 || s.cols() != d2) {
    throw ValidationError("sigma_off must be " + std::to_string(d1) + "x" + std::to_string(d2));
  }
  if (!s.allFinite()) throw DomainError("sigma_off has non-finite entries");
  Matrix q = Matrix::Identity(d2, d2) - s.transpose() * s;
  q = 0.5 * (q + q.transpose());
  Eigen::LLT<Matrix> q_llt(q);
  if (q_llt.info() != Eigen::Success) {
    throw DomainError("I - sigma_off^T sigma_off is numerically singular");
  }
  Matrix g11 = ch.h1 * ch.sigma_y * ch.h1.transpose();
  g11 = 0.5 * (g11 + g11.transpose());
  g11.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> g11_llt(g11);
  if (g11_llt.info() != Eigen::Success) throw NumericalError("G11 is not positive definite");
  Matrix g22 = ch.h2 * ch.sigma_y * ch.h2.transpose();
  g22 = 0.5 * (g22 + g22.transpose());
  g22.diagonal().array() += 1.0;
  const Matrix g12 = ch.h1 * ch.sigma_y * ch.h2.transpose() + s;
  const Matrix k = g11_llt.solve(g12);
  Matrix b = g22 - g12.transpose() * k;
  b = 0.5 * (b + b.transpose());
  Eigen::LLT<Matrix> b_llt(b);
  if (b_llt.info() != Eigen::Success) {
    throw DomainError("Schur complement B is numerically singular");
  }
  return q_llt.solve(s.transpose()).transpose() - b_llt.solve(k.transpose()).transpose();
}

Matrix project(const Matrix& m, double sv_eps) {
  if (!(sv_eps > 0.0 && sv_eps < 1.0)) throw ValidationError("sv_eps must lie in (0, 1)");
  return project_impl(m, sv_eps).value;
}

Matrix init_sigma(const BroadcastChannel& ch, double sv_eps) {
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ch.h2);
  const Matrix raw = ch.h1 * cod.pseudoInverse();
  return project(raw, sv_eps);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.rows() >= m.cols() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

SolverResult solve(const BroadcastChannel& ch, const SolverConfig& cfg) {
  cfg.validate();

  // Work with the wider modality first so the per-iteration Schur complement,
  // Gram matrix and projection all live in min(d1, d2). Every update is
  // elementwise or transpose-equivariant, so the iterates are the transposes
  // of the unswapped run.
  const bool swapped = ch.d1() < ch.d2();
  const Projection start = [&] {
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ch.h2);
    Projection p = project_impl(ch.h1 * cod.pseudoInverse(), cfg.sv_eps);
    if (swapped) p.value.transposeInPlace();
    return p;
  }();
  const ThinPidProblem problem = swapped ? ThinPidProblem(ch.h2, ch.h1, ch.sigma_y)
                                         : ThinPidProblem(ch.h1, ch.h2, ch.sigma_y);

  SolverState state;
  state.sigma_off = start.value;
  bool on_boundary = start.active;
  ThinPidProblem::Evaluation eval = problem.evaluate(state.sigma_off);
  state.eta = Matrix::Constant(state.sigma_off.rows(), state.sigma_off.cols(), cfg.eta0);
  state.prev_sign = sign_of(eval.gradient);

  SolverResult result;
  result.initial_objective = eval.objective;
  result.trace.push_back(eval.objective);
  Matrix best = state.sigma_off;
  double best_objective = eval.objective;
  double max_norm = cfg.track_feasibility ? spectral_norm(state.sigma_off) : 0.0;

  std::vector<double> recent{eval.objective};  // last kStallWindow + 1 objectives
  double decay = 1.0;
  double pg = 0.0;

  // On the boundary the projected gradient costs a second projection, so it is
  // only refreshed every kStallWindow accepted steps there.
  int since_pg = kStallWindow;
  bool pg_fresh = false;
  for (;;) {
    if (since_pg >= kStallWindow || (!on_boundary && !pg_fresh)) {
      pg = projected_gradient_norm(state.sigma_off, eval.gradient, on_boundary, cfg.sv_eps);
      since_pg = 0;
      pg_fresh = true;
      if (pg < cfg.grad_tol) {
        result.converged = true;
        result.reason = StopReason::gradient_small;
        break;
      }
    }
    if (static_cast<int>(recent.size()) == kStallWindow + 1) {
      const double scale = std::max(std::abs(eval.objective), 1.0);
      double worst = 0.0;
      for (std::size_t i = 1; i < recent.size(); ++i) {
        worst = std::max(worst, std::abs(recent[i] - recent[i - 1]));
      }
      if (worst <= cfg.obj_tol * scale) {
        result.converged = true;
        result.reason = StopReason::objective_stalled;
        break;
      }
    }
    if (state.iter >= cfg.max_iters) {
      result.converged = false;
      result.reason = StopReason::max_iters;
      break;
    }

    const Matrix step = state.sigma_off - decay * state.eta.cwiseProduct(eval.gradient);
    Projection next = project_impl(step, cfg.sv_eps);
    ThinPidProblem::Evaluation next_eval = problem.evaluate(next.value);
    if (!std::isfinite(next_eval.objective) || !next_eval.gradient.allFinite()) {
      throw NumericalError("non-finite objective or gradient at iteration " +
                           std::to_string(state.iter + 1));
    }

    if (cfg.monotone && next_eval.objective > eval.objective) {
      // Rejected step: stay put and shrink every step size.
      state.eta *= cfg.beta;
      decay *= cfg.alpha;
      ++state.iter;
      if ((state.sigma_off - next.value).cwiseAbs().maxCoeff() < 1e-15) {
        recent.push_back(eval.objective);
        if (static_cast<int>(recent.size()) > kStallWindow + 1) recent.erase(recent.begin());
      }
      continue;
    }

    const Matrix sign = sign_of(next_eval.gradient);
    const Matrix agreement = sign.cwiseProduct(state.prev_sign);
    state.eta = state.eta.binaryExpr(agreement, [&](double e, double a) {
      if (a > 0.0) return e / cfg.beta;
      if (a < 0.0) return e * cfg.beta;
      return e;
    });
    state.prev_sign = sign;
    state.sigma_off = std::move(next.value);
    ++since_pg;
    pg_fresh = false;
    on_boundary = next.active;
    eval = std::move(next_eval);
    decay *= cfg.alpha;
    ++state.iter;

    if (result.trace.size() < cfg.trace_cap) {
      result.trace.push_back(eval.objective);
    } else {
      result.trace.back() = eval.objective;
    }
    recent.push_back(eval.objective);
    if (static_cast<int>(recent.size()) > kStallWindow + 1) recent.erase(recent.begin());
    if (eval.objective < best_objective) {
      best_objective = eval.objective;
      best = state.sigma_off;
    }
    if (cfg.track_feasibility) max_norm = std::max(max_norm, spectral_norm(state.sigma_off));
  }

  if (!pg_fresh) {
    pg = projected_gradient_norm(state.sigma_off, eval.gradient, on_boundary, cfg.sv_eps);
  }
  result.iterations = state.iter;
  result.projected_grad_norm = pg;
  result.objective = best_objective;
  result.min_mi = 0.5 * best_objective;
  result.sigma_off_star = swapped ? Matrix(best.transpose()) : best;
  if (cfg.track_feasibility) result.max_iterate_norm = max_norm;
  return result;
}

}  // namespace gpid

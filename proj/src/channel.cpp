#include "gpid/channel.hpp"

#include <algorithm>
#include <string>

#include "gpid/errors.hpp"

namespace gpid {

namespace {

// Noise covariances may dip this far below zero (relative to trace/d) from
// round-off; anything worse means the marginals are inconsistent.
constexpr double kNoiseIndefiniteTol = 1e-6;

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

SpdFactor factor_sigma_y(const Matrix& sigma_y) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(sigma_y), Eigen::EigenvaluesOnly);
  const double scale = std::max(sigma_y.trace() / static_cast<double>(sigma_y.rows()), 0.0);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 1e-12 * scale) ||
      scale == 0.0) {
    throw NumericalError("Sigma_Y (the Y block) is singular; Y must have a positive-definite covariance");
  }
  try {
    return SpdFactor(sigma_y);
  } catch (const NumericalError&) {
    throw NumericalError("Sigma_Y (the Y block) is singular; Cholesky failed");
  }
}

struct ReceiverReduction {
  Matrix gain;
  Matrix w;
  Matrix h;
  bool noise_repaired = false;
};

ReceiverReduction reduce_receiver(const Matrix& sigma_x, const Matrix& cross_xy,
                                  const SpdFactor& fy, int modality) {
  const std::string name = "Sigma_n" + std::to_string(modality);
  ReceiverReduction out;
  out.gain = fy.solve(cross_xy.transpose()).transpose();
  const Matrix noise = symmetrized(sigma_x - cross_xy * out.gain.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(noise, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError(name + ": eigendecomposition failed");
  const double scale = std::max(sigma_x.trace() / static_cast<double>(sigma_x.rows()), 0.0);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -kNoiseIndefiniteTol * scale || (scale == 0.0 && min_eig < 0.0)) {
    throw ModelError(name + " is indefinite (min eigenvalue " + std::to_string(min_eig) +
                     "); the X" + std::to_string(modality) + "-Y marginal is inconsistent");
  }

  const Matrix repaired = psd_repair(noise);
  out.noise_repaired = !(repaired.array() == noise.array()).all();
  try {
    out.w = whiten_transform(repaired);
  } catch (const NumericalError&) {
    throw NumericalError(name + " is singular: X" + std::to_string(modality) +
                         " is a noiseless function of Y (infinite information)");
  }
  out.h = out.w * out.gain;
  return out;
}

}  // namespace

double channel_marginal_mi(const Matrix& h, const Matrix& sigma_y) {
  const Matrix g = h * sigma_y * h.transpose() + Matrix::Identity(h.rows(), h.rows());
  return std::max(0.5 * log_det_spd(symmetrized(g)), 0.0);
}

BroadcastChannel make_channel(Matrix h1, Matrix h2, Matrix sigma_y) {
  if (sigma_y.rows() != sigma_y.cols() || sigma_y.rows() < 1) {
    throw ValidationError("sigma_y must be a non-empty square matrix");
  }
  if (h1.cols() != sigma_y.rows() || h2.cols() != sigma_y.rows() || h1.rows() < 1 ||
      h2.rows() < 1) {
    throw ValidationError("channel gains must be d_i x dy with d_i >= 1");
  }
  if (!h1.allFinite() || !h2.allFinite() || !sigma_y.allFinite()) {
    throw ValidationError("channel contains non-finite values");
  }
  factor_sigma_y(sigma_y);
  BroadcastChannel ch;
  ch.h1 = std::move(h1);
  ch.h2 = std::move(h2);
  ch.sigma_y = std::move(sigma_y);
  ch.w1 = Matrix::Identity(ch.d1(), ch.d1());
  ch.w2 = Matrix::Identity(ch.d2(), ch.d2());
  ch.gain1 = ch.h1;
  ch.gain2 = ch.h2;
  ch.i1 = channel_marginal_mi(ch.h1, ch.sigma_y);
  ch.i2 = channel_marginal_mi(ch.h2, ch.sigma_y);
  return ch;
}

BroadcastChannel reduce_to_channel(const CovarianceModel& cov) {
  const BlockDims& dims = cov.dims();
  const Matrix sigma_y = cov.sigma_y();
  const SpdFactor fy = factor_sigma_y(sigma_y);

  const ReceiverReduction r1 = reduce_receiver(cov.sigma_x1(), cov.cross_x1y(), fy, 1);
  const ReceiverReduction r2 = reduce_receiver(cov.sigma_x2(), cov.cross_x2y(), fy, 2);

  BroadcastChannel ch;
  ch.h1 = r1.h;
  ch.h2 = r2.h;
  ch.sigma_y = sigma_y;
  ch.w1 = r1.w;
  ch.w2 = r2.w;
  ch.gain1 = r1.gain;
  ch.gain2 = r2.gain;

  // Raw pairwise blocks are used whenever they are usable as given; a repaired
  // noise covariance means the raw block is not PD, so the channel form is used.
  auto marginal = [&](const ReceiverReduction& r, int modality, Index dx) {
    if (!r.noise_repaired) {
      try {
        return gaussian_mi(cov.pair_joint(modality), dx);
      } catch (const NumericalError&) {
      }
    }
    return channel_marginal_mi(r.h, sigma_y);
  };
  ch.i1 = marginal(r1, 1, dims.d1);
  ch.i2 = marginal(r2, 2, dims.d2);

  if (!cov.pairwise_only()) {
    const Index dx = dims.d1 + dims.d2;
    try {
      ch.ip_total = gaussian_mi(cov.sigma(), dx);
    } catch (const NumericalError&) {
      ch.ip_total = gaussian_mi(psd_repair(cov.sigma()), dx);
    }
  }
  return ch;
}

NoiseCrossCov true_noise_cross_cov(const CovarianceModel& cov, const BroadcastChannel& ch) {
  if (cov.pairwise_only()) {
    throw ContractError("true noise cross-covariance needs the full joint, model is pairwise-only");
  }
  const Matrix raw = cov.cross_x1x2() - ch.gain1 * ch.sigma_y * ch.gain2.transpose();
  return NoiseCrossCov{ch.w1 * raw * ch.w2.transpose()};
}

}  // namespace gpid

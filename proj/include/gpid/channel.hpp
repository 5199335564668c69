#pragma once

#include <optional>

#include "gpid/gauss_core.hpp"

namespace gpid {

// Whitened two-receiver Gaussian broadcast channel X_i = H_i Y + n_i with
// Cov(n_i) = I. Y itself is never whitened; sigma_y enters the objective as-is.
struct BroadcastChannel {
  Matrix h1;       // d1 x dy, whitened gain of modality 1
  Matrix h2;       // d2 x dy
  Matrix sigma_y;  // dy x dy, SPD
  Matrix w1;       // d1 x d1 receiver whitening map
  Matrix w2;       // d2 x d2
  Matrix gain1;    // d1 x dy gain before whitening
  Matrix gain2;    // d2 x dy
  double i1 = 0.0;  // I(X1;Y), nats
  double i2 = 0.0;  // I(X2;Y), nats
  std::optional<double> ip_total;  // I(X1,X2;Y), nats; only with a full joint

  Index d1() const { return h1.rows(); }
  Index d2() const { return h2.rows(); }
  Index dy() const { return sigma_y.rows(); }
};

// Builds a channel that is already in whitened form (W_i = I). Marginal MIs are
// computed from the channel itself; ip_total stays empty.
BroadcastChannel make_channel(Matrix h1, Matrix h2, Matrix sigma_y);

// 0.5 * logdet(H sigma_y H^T + I), the receiver MI of a whitened channel.
double channel_marginal_mi(const Matrix& h, const Matrix& sigma_y);

// Reduces the pairwise second moments to a whitened broadcast channel.
// Gains use H~_i = Sigma_{XiY} Sigma_Y^{-1}, so that
// Sigma_{ni} = Sigma_{Xi} - H~_i Sigma_Y H~_i^T holds for any Sigma_Y.
// Throws NumericalError for a singular Sigma_Y and ModelError when a noise
// covariance is indefinite beyond -1e-6 * trace / d.
BroadcastChannel reduce_to_channel(const CovarianceModel& cov);

// Whitened cross-covariance of the noises implied by a full joint.
struct NoiseCrossCov {
  Matrix off;  // d1 x d2
};

// off = W1 (Sigma_{X1X2} - H~1 Sigma_Y H~2^T) W2^T. ContractError for pairwise-only models.
NoiseCrossCov true_noise_cross_cov(const CovarianceModel& cov, const BroadcastChannel& ch);

}  // namespace gpid

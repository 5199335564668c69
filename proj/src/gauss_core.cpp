#include "gpid/gauss_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gpid/errors.hpp"
#include "gpid/units.hpp"

namespace gpid {

namespace {

constexpr double kModelSymmetryTol = 1e-12;
constexpr double kRepairSymmetryTol = 1e-10;

Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

Unit parse_unit(std::string_view text) {
  if (text == "bits") return Unit::bits;
  if (text == "nats") return Unit::nats;
  throw ValidationError("unknown unit '" + std::string(text) + "' (expected bits or nats)");
}

void check_dims(const BlockDims& dims) {
  if (dims.d1 < 1 || dims.d2 < 1 || dims.dy < 1) {
    throw ValidationError("block widths must be >= 1, got d1=" + std::to_string(dims.d1) +
                          " d2=" + std::to_string(dims.d2) + " dy=" + std::to_string(dims.dy));
  }
}

double relative_asymmetry(const Matrix& a) {
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

SampleMatrix::SampleMatrix(BlockDims dims, Matrix values)
    : dims_(dims), values_(std::move(values)) {
  check_dims(dims_);
  if (values_.cols() != dims_.total()) {
    throw ValidationError("sample matrix has " + std::to_string(values_.cols()) +
                          " columns, expected d1+d2+dy=" + std::to_string(dims_.total()));
  }
  if (values_.rows() < 1) throw ValidationError("sample matrix has no rows");
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index j = 0; j < values_.cols(); ++j) {
      if (!std::isfinite(values_(i, j))) {
        throw ValidationError("non-finite value at row " + std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
}

CovarianceModel::CovarianceModel(BlockDims dims, Vector mean, Matrix sigma, bool pairwise_only)
    : dims_(dims), mean_(std::move(mean)), sigma_(std::move(sigma)), pairwise_only_(pairwise_only) {
  check_dims(dims_);
  const Index d = dims_.total();
  if (sigma_.rows() != d || sigma_.cols() != d) {
    throw ValidationError("covariance must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (mean_.size() != d) {
    throw ValidationError("mean must have length " + std::to_string(d));
  }
  if (!sigma_.allFinite() || !mean_.allFinite()) {
    throw ValidationError("covariance model contains non-finite values");
  }
  if (pairwise_only_) {
    // The unknown cross block is zeroed so nothing downstream can read stale numbers.
    sigma_.block(0, dims_.d1, dims_.d1, dims_.d2).setZero();
    sigma_.block(dims_.d1, 0, dims_.d2, dims_.d1).setZero();
  }
  if (relative_asymmetry(sigma_) > kModelSymmetryTol) {
    throw ValidationError("covariance is not symmetric");
  }
}

Matrix CovarianceModel::sigma_x1() const { return sigma_.topLeftCorner(dims_.d1, dims_.d1); }

Matrix CovarianceModel::sigma_x2() const {
  return sigma_.block(dims_.d1, dims_.d1, dims_.d2, dims_.d2);
}

Matrix CovarianceModel::sigma_y() const {
  return sigma_.bottomRightCorner(dims_.dy, dims_.dy);
}

Matrix CovarianceModel::cross_x1y() const {
  return sigma_.block(0, dims_.d1 + dims_.d2, dims_.d1, dims_.dy);
}

Matrix CovarianceModel::cross_x2y() const {
  return sigma_.block(dims_.d1, dims_.d1 + dims_.d2, dims_.d2, dims_.dy);
}

Matrix CovarianceModel::cross_x1x2() const {
  if (pairwise_only_) {
    throw ContractError("X1-X2 cross covariance is unknown for a pairwise-only model");
  }
  return sigma_.block(0, dims_.d1, dims_.d1, dims_.d2);
}

Matrix CovarianceModel::pair_joint(int modality) const {
  if (modality != 1 && modality != 2) throw ValidationError("modality must be 1 or 2");
  const Matrix sx = modality == 1 ? sigma_x1() : sigma_x2();
  const Matrix cxy = modality == 1 ? cross_x1y() : cross_x2y();
  const Index dx = sx.rows();
  Matrix joint(dx + dims_.dy, dx + dims_.dy);
  joint.topLeftCorner(dx, dx) = sx;
  joint.topRightCorner(dx, dims_.dy) = cxy;
  joint.bottomLeftCorner(dims_.dy, dx) = cxy.transpose();
  joint.bottomRightCorner(dims_.dy, dims_.dy) = sigma_y();
  return joint;
}

SpdFactor::SpdFactor(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw NumericalError("Cholesky requires a non-empty square matrix");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("matrix is not positive definite (Cholesky failed)");
  }
  lower_ = llt.matrixL();
  double ld = 0.0;
  for (Index i = 0; i < lower_.rows(); ++i) {
    const double diag = lower_(i, i);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericalError("matrix is not positive definite (non-positive pivot)");
    }
    ld += std::log(diag);
  }
  log_det_ = 2.0 * ld;
}

Matrix SpdFactor::solve(const Matrix& rhs) const {
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

CovarianceModel estimate_covariance(const SampleMatrix& samples) {
  const Index n = samples.rows();
  if (n < 2) throw ValidationError("covariance estimation needs at least 2 samples");
  const Matrix& x = samples.values();
  const Vector mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - mean.transpose();
  const Index d = x.cols();
  Matrix sigma = Matrix::Zero(d, d);
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(n));
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
  return CovarianceModel(samples.dims(), mean, std::move(sigma));
}

double default_repair_floor(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  return 1e-10 * std::max(a.trace() / static_cast<double>(a.rows()), 0.0);
}

Matrix psd_repair(const Matrix& a, std::optional<double> floor) {
  if (a.rows() != a.cols()) throw ValidationError("psd_repair needs a square matrix");
  if (relative_asymmetry(a) > kRepairSymmetryTol) {
    throw ValidationError("psd_repair input is not symmetric");
  }
  const double f = floor.value_or(default_repair_floor(a));
  if (f < 0.0) throw ValidationError("repair floor must be non-negative");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(a));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in psd_repair");
  const Vector& lambda = eig.eigenvalues();
  if (lambda.minCoeff() >= f) return a;
  const Vector clipped = lambda.cwiseMax(f);
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * clipped.asDiagonal() * v.transpose());
}

Matrix whiten_transform(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw ValidationError("whitening needs a non-empty square matrix");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(sigma));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in whitening");
  const Vector& lambda = eig.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  if (!(lambda.minCoeff() > 1e-15 * scale)) {
    throw NumericalError("cannot whiten a singular covariance");
  }
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose());
}

double log_det_spd(const Matrix& a) { return SpdFactor(a).log_det(); }

double gaussian_entropy(const Matrix& sigma) {
  const double d = static_cast<double>(sigma.rows());
  return 0.5 * d * std::log(2.0 * std::numbers::pi) + 0.5 * log_det_spd(sigma) + 0.5 * d;
}

double gaussian_mi(const Matrix& joint, Index dim_a) {
  const Index d = joint.rows();
  if (joint.cols() != d || dim_a < 1 || dim_a >= d) {
    throw ValidationError("gaussian_mi needs a square joint covariance with two non-empty blocks");
  }
  const Index dim_b = d - dim_a;
  const double ld_a = log_det_spd(joint.topLeftCorner(dim_a, dim_a));
  const double ld_b = log_det_spd(joint.bottomRightCorner(dim_b, dim_b));
  const double ld_ab = log_det_spd(joint);
  return std::max(0.5 * (ld_a + ld_b - ld_ab), 0.0);
}

}  // namespace gpid

#pragma once

#include <Eigen/Dense>
#include <optional>

namespace gpid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Column-block widths of a trivariate sample (X1 | X2 | Y).
struct BlockDims {
  Index d1 = 0;
  Index d2 = 0;
  Index dy = 0;

  Index total() const { return d1 + d2 + dy; }
  bool operator==(const BlockDims&) const = default;
};

// Validates that every width is at least one; throws ValidationError otherwise.
void check_dims(const BlockDims& dims);

// n x (d1 + d2 + dy) samples, columns ordered X1-block, X2-block, Y-block.
// Construction rejects non-finite entries, naming the offending row.
class SampleMatrix {
 public:
  SampleMatrix(BlockDims dims, Matrix values);

  const BlockDims& dims() const { return dims_; }
  Index rows() const { return values_.rows(); }
  const Matrix& values() const { return values_; }

  auto x1() const { return values_.leftCols(dims_.d1); }
  auto x2() const { return values_.middleCols(dims_.d1, dims_.d2); }
  auto y() const { return values_.rightCols(dims_.dy); }

 private:
  BlockDims dims_;
  Matrix values_;
};

// Second moments of (X1, X2, Y). With pairwise_only set, the X1-X2 cross block
// carries no information and must not be read.
class CovarianceModel {
 public:
  CovarianceModel(BlockDims dims, Vector mean, Matrix sigma, bool pairwise_only = false);

  const BlockDims& dims() const { return dims_; }
  const Vector& mean() const { return mean_; }
  const Matrix& sigma() const { return sigma_; }
  bool pairwise_only() const { return pairwise_only_; }

  Matrix sigma_x1() const;
  Matrix sigma_x2() const;
  Matrix sigma_y() const;
  Matrix cross_x1y() const;   // d1 x dy
  Matrix cross_x2y() const;   // d2 x dy
  Matrix cross_x1x2() const;  // d1 x d2; ContractError when pairwise_only

  // Joint covariance of (Xi, Y), i in {1, 2}, ordered Xi then Y.
  Matrix pair_joint(int modality) const;

 private:
  BlockDims dims_;
  Vector mean_;
  Matrix sigma_;
  bool pairwise_only_;
};

// Cholesky factor of a symmetric positive-definite matrix with its log-determinant.
class SpdFactor {
 public:
  // Throws NumericalError when the matrix is not numerically positive definite.
  explicit SpdFactor(const Matrix& a);

  Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }
  double log_det() const { return log_det_; }

  Matrix solve(const Matrix& rhs) const;

 private:
  Matrix lower_;
  double log_det_ = 0.0;
};

// Maximum-likelihood mean and covariance (1/n normalization).
CovarianceModel estimate_covariance(const SampleMatrix& samples);

// Default eigenvalue floor for psd_repair: 1e-10 * trace / d.
double default_repair_floor(const Matrix& a);

// Clips eigenvalues from below at `floor`. Returns the input unchanged when its
// smallest eigenvalue already clears the floor. Throws ValidationError when the
// input is not symmetric within a relative 1e-10.
Matrix psd_repair(const Matrix& a, std::optional<double> floor = std::nullopt);

// Inverse symmetric square root: W * sigma * W^T = I with W symmetric PD.
Matrix whiten_transform(const Matrix& sigma);

// Differential entropy of N(mu, sigma) in nats.
double gaussian_entropy(const Matrix& sigma);

// I(A;B) in nats for a joint covariance whose first dim_a coordinates are A.
double gaussian_mi(const Matrix& joint, Index dim_a);

// Natural log-determinant of an SPD matrix via Cholesky.
double log_det_spd(const Matrix& a);

// Largest absolute entry of A - A^T relative to the largest absolute entry of A.
double relative_asymmetry(const Matrix& a);

}  // namespace gpid

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "gpid/gauss_core.hpp"

namespace gpid::test {

// Test-only draws; the library never sees this engine.
class Rand {
 public:
  explicit Rand(unsigned long long seed) : eng_(seed) {}

  double normal() { return norm_(eng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }

  Matrix normal(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal();
    return m;
  }

  Matrix spd(Index n, double ridge = 0.1) {
    const Matrix a = normal(n, n);
    return a * a.transpose() / static_cast<double>(n) + ridge * Matrix::Identity(n, n);
  }

  Matrix orthogonal(Index n) {
    Eigen::HouseholderQR<Matrix> qr(normal(n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
  }

  // Random matrix with spectral norm exactly `norm`.
  Matrix with_norm(Index rows, Index cols, double norm) {
    Matrix m = normal(rows, cols);
    Eigen::JacobiSVD<Matrix> svd(m);
    return m * (norm / svd.singularValues()(0));
  }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> norm_;
};

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double top_singular(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Block-diagonal map acting on each of X1, X2, Y.
inline Matrix block_diag(const Matrix& a, const Matrix& b, const Matrix& c) {
  const Index n = a.rows() + b.rows() + c.rows();
  Matrix t = Matrix::Zero(n, n);
  t.topLeftCorner(a.rows(), a.cols()) = a;
  t.block(a.rows(), a.rows(), b.rows(), b.cols()) = b;
  t.bottomRightCorner(c.rows(), c.cols()) = c;
  return t;
}

}  // namespace gpid::test

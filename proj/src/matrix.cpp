#include "actnorm/matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "actnorm/errors.hpp"

namespace actnorm {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::fabs(v));
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

namespace kernels {
namespace {

void require_shapes(std::size_t inner_a, std::size_t inner_b, const char* what) {
  if (inner_a != inner_b)
    throw validation_error(std::string("matmul shape mismatch in ") + what + ": " +
                           std::to_string(inner_a) + " vs " + std::to_string(inner_b));
}

// Row workers are noinline so the serial and parallel drivers share one code
// path; otherwise the vectorizer could specialize them differently and break
// the bitwise-equality contract.

__attribute__((noinline)) void nn_row(const double* arow, const Matrix& b, double* crow) {
  const std::size_t k_dim = b.rows(), n = b.cols();
  std::memset(crow, 0, n * sizeof(double));
  for (std::size_t k = 0; k < k_dim; ++k) {
    const double aik = arow[k];
    const double* brow = b.row(k);
    for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
  }
}

// C^T accumulation: crow = sum_s A(s,i) * B.row(s), i fixed
__attribute__((noinline)) void tn_row(const Matrix& a, const Matrix& b, std::size_t i,
                                      double* crow) {
  const std::size_t s_dim = a.rows(), n = b.cols();
  std::memset(crow, 0, n * sizeof(double));
  for (std::size_t s = 0; s < s_dim; ++s) {
    const double asi = a(s, i);
    const double* brow = b.row(s);
    for (std::size_t j = 0; j < n; ++j) crow[j] += asi * brow[j];
  }
}

}  // namespace

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.rows(), "A*B");
  Matrix c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(a.rows()); ++i)
    nn_row(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul_nn_serial(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.rows(), "A*B");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) nn_row(a.row(i), b, c.row(i));
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.cols(), "A*B^T");
  return matmul_nn(a, transpose(b));
}

Matrix matmul_nt_serial(const Matrix& a, const Matrix& b) {
  require_shapes(a.cols(), b.cols(), "A*B^T");
  return matmul_nn_serial(a, transpose(b));
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_shapes(a.rows(), b.rows(), "A^T*B");
  Matrix c(a.cols(), b.cols());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(a.cols()); ++i) tn_row(a, b, i, c.row(i));
  return c;
}

Matrix matmul_tn_serial(const Matrix& a, const Matrix& b) {
  require_shapes(a.rows(), b.rows(), "A^T*B");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) tn_row(a, b, i, c.row(i));
  return c;
}

}  // namespace kernels

namespace {

// In-place Householder QR of a (rows >= cols); returns the diagonal signs of R
// and leaves the reflectors in the lower triangle with their scales in tau.
void householder_qr(Matrix& a, std::vector<double>& tau, std::vector<double>& r_sign) {
  const std::size_t m = a.rows(), n = a.cols();
  tau.assign(n, 0.0);
  r_sign.assign(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < m; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double alpha = a(k, k) >= 0 ? -norm : norm;
    r_sign[k] = alpha >= 0 ? 1.0 : -1.0;
    double v0 = a(k, k) - alpha;
    double vnorm2 = v0 * v0;
    for (std::size_t i = k + 1; i < m; ++i) vnorm2 += a(i, k) * a(i, k);
    if (vnorm2 == 0.0) continue;
    tau[k] = 2.0 / vnorm2;
    a(k, k) = v0;
    for (std::size_t j = k + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += a(i, k) * a(i, j);
      dot *= tau[k];
      for (std::size_t i = k; i < m; ++i) a(i, j) -= dot * a(i, k);
    }
    // stash alpha implicitly: column k below stores v, R(k,k)=alpha not needed
  }
}

// Accumulate the economy Q (m x n) from the stored reflectors.
Matrix form_q(const Matrix& a, const std::vector<double>& tau) {
  const std::size_t m = a.rows(), n = a.cols();
  Matrix q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    if (tau[k] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t i = k; i < m; ++i) dot += a(i, k) * q(i, j);
      dot *= tau[k];
      for (std::size_t i = k; i < m; ++i) q(i, j) -= dot * a(i, k);
    }
  }
  return q;
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix a(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return a;
}

}  // namespace

Matrix haar_orthogonal(std::size_t n, std::mt19937_64& rng) {
  Matrix a = gaussian_matrix(n, n, rng);
  std::vector<double> tau, r_sign;
  householder_qr(a, tau, r_sign);
  Matrix q = form_q(a, tau);
  // Fixing the signs of R's diagonal makes the distribution Haar instead of
  // QR-convention-dependent.
  for (std::size_t j = 0; j < n; ++j)
    if (r_sign[j] < 0)
      for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
  return q;
}

Matrix haar_orthonormal_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows > cols)
    throw validation_error("orthonormal rows need rows <= cols, got " + std::to_string(rows) +
                           "x" + std::to_string(cols));
  Matrix a = gaussian_matrix(cols, rows, rng);
  std::vector<double> tau, r_sign;
  householder_qr(a, tau, r_sign);
  Matrix q = form_q(a, tau);
  for (std::size_t j = 0; j < rows; ++j)
    if (r_sign[j] < 0)
      for (std::size_t i = 0; i < cols; ++i) q(i, j) = -q(i, j);
  return transpose(q);
}

}  // namespace actnorm

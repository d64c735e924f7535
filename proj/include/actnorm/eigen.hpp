#pragma once

#include <vector>

#include "actnorm/matrix.hpp"

namespace actnorm {

struct Tridiagonal {
  std::vector<double> diag;     // n entries
  std::vector<double> offdiag;  // n-1 entries
};

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Only the tridiagonal is produced; the transform is not accumulated.
Tridiagonal householder_tridiagonalize(Matrix a);

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL,
/// returned ascending.
std::vector<double> ql_eigenvalues(Tridiagonal t);

/// All eigenvalues of a symmetric matrix, ascending.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

}  // namespace actnorm

#pragma once

#include <vector>

namespace bileveler {

using DenseMatrix = std::vector<std::vector<double>>;

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(DenseMatrix a);

}  // namespace bileveler

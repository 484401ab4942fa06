#include "kleinman/random.h"

#include <cmath>

namespace kleinman {

Matrix random_gaussian(Eigen::Index rows, Eigen::Index cols,
                       std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  // Fill column-major explicitly so the draw order is fixed.
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

SymOperator random_psd(Eigen::Index n, Eigen::Index rank,
                       std::mt19937_64& rng) {
  const Matrix g = random_gaussian(n, rank, rng);
  return SymOperator::symmetrized(g * g.transpose());
}

SymOperator random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
  return SymOperator::symmetrized(random_gaussian(n, n, rng));
}

Matrix random_with_abscissa(Eigen::Index n, double abscissa,
                            std::mt19937_64& rng) {
  Matrix a = random_gaussian(n, n, rng) / std::sqrt(static_cast<double>(n));
  Eigen::EigenSolver<Matrix> es(a, false);
  const double current = es.eigenvalues().real().maxCoeff();
  a.diagonal().array() += abscissa - current;
  return a;
}

}  // namespace kleinman

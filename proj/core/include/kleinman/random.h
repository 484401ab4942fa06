#pragma once

#include <random>

#include "kleinman/operator_core.h"

namespace kleinman {

/// Random test-problem generators. All draws come from the caller's engine so
/// sequences are reproducible from a seed.

Matrix random_gaussian(Eigen::Index rows, Eigen::Index cols,
                       std::mt19937_64& rng);

/// G G^T with G n x rank Gaussian.
SymOperator random_psd(Eigen::Index n, Eigen::Index rank,
                       std::mt19937_64& rng);

/// Gaussian symmetric matrix (G + G^T)/2, generally indefinite.
SymOperator random_symmetric(Eigen::Index n, std::mt19937_64& rng);

/// Gaussian matrix shifted so its spectral abscissa equals `abscissa`.
Matrix random_with_abscissa(Eigen::Index n, double abscissa,
                            std::mt19937_64& rng);

}  // namespace kleinman

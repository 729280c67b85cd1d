#pragma once

#include <vector>

#include <Eigen/Dense>

#include "loopmp/spectra.hpp"

namespace loopmp {

struct EigenvalueResult {
  std::vector<double> values;  // ascending
  int sweeps = 0;
};

// All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations,
// iterated until the off-diagonal Frobenius norm drops below 1e-10 ||m||_F.
// Throws ValidationError if m is not symmetric to 1e-12 (relative) and
// BudgetError above `max_size` rows.
EigenvalueResult dense_eigenvalues(const Eigen::MatrixXd& m, Eigen::Index max_size = 4000);

// rho(x) = (1/(n pi)) sum_i eta / ((x - lambda_i)^2 + eta^2)
DensityCurve smoothed_density(const std::vector<double>& eigenvalues, const std::vector<double>& grid, double eta);

}  // namespace loopmp

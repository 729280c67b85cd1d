#include "loopmp/spectra_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Jacobi>

#include "loopmp/errors.hpp"

namespace loopmp {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  return std::sqrt(std::max(0.0, a.squaredNorm() - a.diagonal().squaredNorm()));
}

}  // namespace

EigenvalueResult dense_eigenvalues(const Eigen::MatrixXd& m, Eigen::Index max_size) {
  if (m.rows() != m.cols()) throw ValidationError("matrix must be square");
  if (m.rows() > max_size)
    throw BudgetError("matrix of size " + std::to_string(m.rows()) + " exceeds the dense budget of " +
                      std::to_string(max_size));
  const double scale = m.norm();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
    throw ValidationError("matrix is not symmetric");

  Eigen::MatrixXd a = m;
  const auto n = a.rows();
  const double target = 1e-10 * scale;
  EigenvalueResult out;
  constexpr int max_sweeps = 100;
  while (off_diagonal_norm(a) > target && out.sweeps < max_sweeps) {
    ++out.sweeps;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        Eigen::JacobiRotation<double> rot;
        if (!rot.makeJacobi(a, p, q)) continue;
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  out.values.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) out.values[static_cast<std::size_t>(k)] = a(k, k);
  std::sort(out.values.begin(), out.values.end());
  return out;
}

DensityCurve smoothed_density(const std::vector<double>& eigenvalues, const std::vector<double>& grid, double eta) {
  if (!(eta > 0.0)) throw ValidationError("eta must be strictly positive");
  DensityCurve curve;
  curve.eta = eta;
  curve.x = grid;
  const double norm = eigenvalues.empty() ? 0.0 : 1.0 / (static_cast<double>(eigenvalues.size()) * std::numbers::pi);
  for (double x : grid) {
    double acc = 0.0;
    for (double lam : eigenvalues) acc += eta / ((x - lam) * (x - lam) + eta * eta);
    curve.rho.push_back(acc * norm);
  }
  curve.converged.assign(grid.size(), 1);
  curve.iterations.assign(grid.size(), 0);
  return curve;
}

}  // namespace loopmp

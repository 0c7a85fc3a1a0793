#pragma once

#include <limits>

#include <Eigen/Dense>

#include "quarc/community.hpp"
#include "quarc/error.hpp"

namespace quarc {

/// Kemeny constant of the simple random walk on `g`: sum over the non-unit
/// eigenvalues l of the transition matrix of 1 / (1 - l). The transition
/// matrix D^-1 A is similar to the symmetric D^-1/2 A D^-1/2, whose spectrum
/// is computed instead. Returns +inf when `g` is disconnected.
inline double kemeny_constant(const LocalGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.vertex_count());
  if (n < 2) throw DomainError("kemeny constant needs at least two nodes");
  if (component_count(g) != 1) return std::numeric_limits<double>::infinity();

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (const auto& e : g.edges) {
    degree[e.u] += 1.0;
    degree[e.v] += 1.0;
  }
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges) {
    const double w = 1.0 / std::sqrt(degree[e.u] * degree[e.v]);
    sym(e.u, e.v) = w;
    sym(e.v, e.u) = w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();  // ascending; the last one is 1
  double k = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) k += 1.0 / (1.0 - ev[i]);
  return k;
}

}  // namespace quarc

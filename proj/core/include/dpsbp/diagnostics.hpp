#pragma once

#include <vector>

#include "dpsbp/forward.hpp"

namespace dpsbp {

/// Per-time-node discrete energies and the terms of the energy inequality.
struct EnergyTrace {
  std::vector<double> energy;        // E_k, k = 0..(total nodes); E_0 from data
  std::vector<double> boundary;      // BT_hk per node (k >= 1)
  std::vector<double> damping;       // ||c^{-1} sigma V_k||^2_H per node
  std::vector<double> hk;            // quadrature weights h_k = (Ht)_kk / dt
  double initial_energy = 0;
  double stability_constant = 1.0;   // C = max(-mu1^2/(2mu1+1), -mu3^2/(2mu3+1))

  double final_energy() const { return energy.back(); }
  /// Left side of the energy inequality minus C*E_0 (nonpositive when stable);
  /// energies and the weighted sums are accumulated across all blocks.
  double inequality_slack(double dt) const;
};

/// V = (D^(j)_t x I) U - mu1 (Ht^{-1} e1 e1^T x I)(U - F) on one block.
Vector auxiliary_field(const Vector& u_block, const Vector& f, const TimeOps& tm,
                       double mu1, Index n_space);

EnergyTrace energy_trace(const SolutionField& u, const Discretization& d);

/// Closed-form solution of the constant-coefficient test problems; valid for
/// cosine initial data with homogeneous Neumann boundaries.
struct ExactSolution {
  int dim = 1;
  double c = 1.0;
  double sigma = 0.0;
  double omega = 0.0;

  double phi(double t) const;
  double operator()(double x, double y, double t) const;
};

ExactSolution exact_solution(int dim, double c, double sigma);

/// H-weighted L2 norm of (numerical - exact) at the final time.
double l2_error(const SolutionField& u, const ExactSolution& ex,
                const Discretization& d);

/// Least-squares slope of log(error) against log(delta).
double convergence_rate(const std::vector<std::pair<double, double>>& errors);

}  // namespace dpsbp

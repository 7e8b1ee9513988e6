#pragma once

#include <vector>

#include "dpsbp/forward.hpp"

namespace dpsbp {

/// Fully discrete adjoint block system, assembled in the reversed-time
/// variable so it marches forward like the primal problem.
struct AdjointSystem {
  SparseMatrix matrix;
  Grid grid;
  /// False when flavor_i != flavor_j: the scheme still transposes exactly but
  /// the adjoint energy estimate is unproven.
  bool stability_proven = true;
  mutable std::optional<Factorization> factor;

  const Factorization& factorization(SolveOptions opts = {}) const;
};

/// (D~j_tau D~i_tau x I) + (D~j_tau x (sigma^2+B)) - (I x c^2 Dxx~).
/// Requires the unit initial penalties mu1 = mu3 = -1.
AdjointSystem assemble_adjoint(const Discretization& d);

/// Interface transfer operator C: block b's initial SAT forcing equals
/// C * U^{(b-1)}.
SparseMatrix assemble_transfer(const Discretization& d);

/// Diagonal of the Lagrangian weight W = Ht x (c^{-2} Hx).
Vector lagrangian_weight(const Discretization& d);

struct AdjointSolution {
  std::vector<Vector> lambda_bar;  // tau-ordered, one per block
  std::vector<Vector> lambda;      // t-ordered: (R x I) lambda_bar
};

/// Solve the multiblock adjoint given the euclidean misfit gradients
/// dJ/dU per block. Blocks are traversed in reverse physical order; block b
/// receives the transposed interface transfer from block b+1.
AdjointSolution solve_adjoint(const Discretization& d, const AdjointSystem& sys,
                              const std::vector<Vector>& grad_u,
                              SolveOptions opts = {});

/// Reverse the time blocks of a space-time vector: (R x I) v.
Vector reverse_time(const Grid& g, const Vector& v);

}  // namespace dpsbp

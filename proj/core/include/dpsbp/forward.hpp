#pragma once

#include <optional>
#include <vector>

#include "dpsbp/linalg.hpp"
#include "dpsbp/operators.hpp"
#include "dpsbp/problem.hpp"

namespace dpsbp {

/// Space-time grid metadata. Vectors over space are laid out x-major
/// (node = ix*ny + iy); space-time vectors are time-major (entry = k*n + node).
struct Grid {
  int dim = 1;
  int order = 4;
  TimeFlavor flavor_i = TimeFlavor::Minus;
  TimeFlavor flavor_j = TimeFlavor::Minus;
  Index nx = 0, ny = 1;
  Index m = 0;       // time points per block
  int n_blocks = 1;
  double dx = 0, dy = 0, dt = 0;

  Index n_space() const { return nx * ny; }
  Index n_spacetime() const { return m * n_space(); }
  double block_duration() const { return dt * static_cast<double>(m - 1); }
};

/// Make a grid with dx = dy = dt = delta on the problem domain, final time
/// split into n_blocks equal blocks. Throws if the splits are not exact.
Grid make_uniform_grid(const WaveProblem& prob, int order, double delta,
                       int n_blocks, TimeFlavor fi, TimeFlavor fj);

/// Operators and sampled coefficients for one problem/grid pair; immutable
/// after construction and shared by the forward, adjoint and diagnostic paths.
struct Discretization {
  WaveProblem problem;
  Grid grid;
  PenaltyConfig penalty;
  SbpTriplet space_x;
  SbpTriplet space_y;  // unused when dim == 1
  TimeOps time;
  Vector x_coords, y_coords;      // axis coordinates
  Vector c2, sigma2;              // sampled c^2, sigma^2 over space nodes
  Vector h_space;                 // diag of Hx (tensor Hx x Hy in 2D)
  Vector f0, g0;                  // sampled initial data
  SparseMatrix laplacian;         // c^2 (Dxx~ [⊕ Dyy~])
  SparseMatrix damping_boundary;  // diagonal sigma^2 + B
  std::vector<Index> boundary_nodes;  // spatial ids of the domain boundary
};

Discretization discretize(const WaveProblem& prob, const Grid& grid,
                          const PenaltyConfig& pen = PenaltyConfig::defaults());

/// Dxx~ = -Hx^{-1} (Dx-)^T Hx Dx- ; self-adjoint in the Hx inner product.
SparseMatrix assemble_dxx(const SbpTriplet& sp);

/// Diagonal boundary damping matrix for one axis,
/// Hx^{-1} c^2 (betaR/alphaR eN eN^T - betaL/alphaL e1 e1^T), lifted to the
/// tensor grid. c2_face carries the sampled c^2 over space nodes.
SparseMatrix assemble_boundary_matrix(const SbpTriplet& sp, const AxisBc& bc,
                                      const Vector& c2, int axis, Index nx, Index ny);

/// One implicit space-time block system (forward or adjoint share the shape).
struct DiscreteSystem {
  SparseMatrix matrix;
  Grid grid;
  PenaltyConfig penalty;
  mutable std::optional<Factorization> factor;  // built lazily, reused

  const Factorization& factorization(SolveOptions opts = {}) const;
};

/// Assemble the forward block operator
///  (D~i D~j x I) + (D~j x (sigma^2+B)) - (I x c^2 Dxx~)   for mu1 = mu3 = -1,
/// or the four-term SAT form for general admissible penalties.
DiscreteSystem assemble_forward(const Discretization& d);

/// Sampled source plus boundary-data forcing for block `block`, evaluated at
/// the block's time nodes.
Vector sample_source(const Discretization& d, int block);

/// Initial-data SAT forcing with data (f, g):
///  (D~i Ht^{-1} e1 x I) f + (Ht^{-1} e1 x (sigma^2+B)) f + (Ht^{-1} e1 x I) g
/// for mu1 = mu3 = -1; general-mu variant otherwise.
Vector initial_sat(const Discretization& d, const Vector& f, const Vector& g);

struct SolutionBlock {
  Vector u;       // m*n space-time values
  Vector f, g;    // initial data handed to this block
  double t0 = 0;  // physical start time
};

struct SolutionField {
  std::vector<SolutionBlock> blocks;
  Grid grid;

  /// Spatial slice at time node k of block b.
  Vector slice(int b, Index k) const;
  /// Final-time spatial slice.
  Vector final_slice() const;
};

/// Solve block-by-block; block b > 0 takes its initial data from block b-1's
/// final-time displacement and discrete velocity traces.
SolutionField march_multiblock(const Discretization& d,
                               const DiscreteSystem& sys,
                               SolveOptions opts = {});

/// Same, with explicit initial data replacing the problem's sampled (f, g).
SolutionField march_multiblock(const Discretization& d, const DiscreteSystem& sys,
                               const Vector& f, const Vector& g,
                               SolveOptions opts = {});

/// Convenience: assemble + march in one call.
SolutionField solve_forward(const Discretization& d, SolveOptions opts = {});

/// Final-time displacement and discrete-velocity traces of a block solution.
Vector displacement_trace(const Discretization& d, const Vector& u_block);
Vector velocity_trace(const Discretization& d, const Vector& u_block);

}  // namespace dpsbp

#pragma once

#include <array>
#include <optional>

#include "dpsbp/linalg.hpp"

namespace dpsbp {

/// Flavor of a first-derivative operator in time: the upwind (backward) stencil
/// or the centered average of the dual pair.
enum class TimeFlavor { Minus, Center };

/// Dual-pairing triplet (D-, D+, H) on a uniform grid.
struct SbpTriplet {
  int order = 0;       // interior accuracy
  Index n = 0;         // grid points
  double spacing = 0;  // grid step
  SparseMatrix d_minus;
  SparseMatrix d_plus;
  Vector h;  // diagonal of the norm/quadrature matrix
};

/// Temporal operator family on one time block.
struct TimeOps {
  int order = 0;
  Index m = 0;
  double step = 0;
  SparseMatrix d_minus;   // D^-_t
  SparseMatrix d_center;  // D_t = (D^- + D^+)/2
  Vector h;               // diagonal of H_t
  TimeFlavor flavor_i = TimeFlavor::Minus;
  TimeFlavor flavor_j = TimeFlavor::Minus;

  const SparseMatrix& op(TimeFlavor f) const {
    return f == TimeFlavor::Minus ? d_minus : d_center;
  }
};

struct AssumptionReport {
  bool norm_positive = false;          // A.1
  bool interior_accuracy = false;      // A.2 (interior rows)
  bool sbp_identity = false;           // A.3
  bool dissipativity = false;          // A.4 (space) / B.1 (time)
  double min_norm_entry = 0;
  double interior_poly_rel_err = 0;
  double sbp_identity_max_abs = 0;
  double dissipativity_eig = 0;        // max eig (space, NSD) or -min eig (time, PSD)
  int boundary_row_degree = -1;        // measured, reported only
  bool pass() const {
    return norm_positive && interior_accuracy && sbp_identity && dissipativity;
  }
};

/// Build the spatial dual-pairing triplet of the given interior order on an
/// n-point grid with the given spacing.
SbpTriplet build_space_triplet(int order, Index n, double spacing);

/// Build the temporal operator set (D^-_t, D_t, H_t) and record the selected
/// flavor pair.
TimeOps build_time_ops(int order, Index m, double step, TimeFlavor flavor_i,
                       TimeFlavor flavor_j);

AssumptionReport verify_space(const SbpTriplet& t);
AssumptionReport verify_time(const TimeOps& t);

/// D~t = Dt + Ht^{-1} e1 e1^T : time derivative with the rank-one initial
/// penalty folded in.
SparseMatrix penalized_time_op(const TimeOps& t, TimeFlavor flavor);

/// Adjoint companion operator: D^+t - Ht^{-1} eM eM^T for the Minus flavor,
/// Dt - Ht^{-1} eM eM^T for the Center flavor.
SparseMatrix adjoint_time_op(const TimeOps& t, TimeFlavor flavor);

/// Penalized operator of the reversed-time variable, -R*adjoint_time_op*R.
SparseMatrix reversed_time_op(const TimeOps& t, TimeFlavor flavor);

/// Backward identity of size n.
SparseMatrix reversal_matrix(Index n);

/// Number of boundary closure rows per side for a supported order.
int closure_rows(int order);
/// Smallest admissible grid size for a supported order.
Index min_points(int order);

namespace detail {
struct OperatorFamily {
  int order;
  int rows;   // closure block rows
  int width;  // closure block width
};
OperatorFamily family(int order);
}  // namespace detail

}  // namespace dpsbp

#include "dpsbp/operators.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace dpsbp {

namespace {
#include "operator_tables.inc"

struct Tables {
  int rows;        // closure block rows
  int width;       // closure block width
  int weights;     // modified norm weights per side
  int lo, hi;      // D+ interior stencil support
  const double* norm_boundary;
  const double* stencil;
  const double* plus;   // rows x width, row-major
  const double* minus;
};

Tables tables_for(int order) {
  switch (order) {
    case 2:
      return {kClosureRows2, kClosureWidth2, kNormWeights2, kStencilLo2,
              kStencilHi2, kNormBoundary2, kPlusStencil2, &kPlusClosure2[0][0],
              &kMinusClosure2[0][0]};
    case 4:
      return {kClosureRows4, kClosureWidth4, kNormWeights4, kStencilLo4,
              kStencilHi4, kNormBoundary4, kPlusStencil4, &kPlusClosure4[0][0],
              &kMinusClosure4[0][0]};
    case 6:
      return {kClosureRows6, kClosureWidth6, kNormWeights6, kStencilLo6,
              kStencilHi6, kNormBoundary6, kPlusStencil6, &kPlusClosure6[0][0],
              &kMinusClosure6[0][0]};
    case 8:
      return {kClosureRows8, kClosureWidth8, kNormWeights8, kStencilLo8,
              kStencilHi8, kNormBoundary8, kPlusStencil8, &kPlusClosure8[0][0],
              &kMinusClosure8[0][0]};
    default:
      fail(ErrorCode::UnsupportedOrder,
           "unsupported operator order " + std::to_string(order) +
               " (supported: 2, 4, 6, 8)");
  }
}

struct CorePair {
  SparseMatrix d_minus;
  SparseMatrix d_plus;
  SparseMatrix d_center;
  Vector h;
};

SparseMatrix sparsify(const Eigen::MatrixXd& m) {
  SparseMatrix out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) out.add(i, j, m(i, j));
  out.finalize();
  return out;
}

/// Trapezoid-norm centered pair for two- and three-point order-2 grids: the
/// smallest blocks in time marching degenerate to D+ = D- = D.
CorePair tiny_order2(Index n, double step) {
  Vector h = Vector::Constant(n, step);
  h[0] = h[n - 1] = 0.5 * step;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  d(0, 0) = -1.0 / step;
  d(0, 1) = 1.0 / step;
  d(n - 1, n - 2) = -1.0 / step;
  d(n - 1, n - 1) = 1.0 / step;
  for (Index i = 1; i + 1 < n; ++i) {
    d(i, i - 1) = -0.5 / step;
    d(i, i + 1) = 0.5 / step;
  }
  SparseMatrix ds = sparsify(d);
  return {ds, ds, ds, std::move(h)};
}

CorePair build_pair(int order, Index n, double step) {
  const Tables t = tables_for(order);
  if (step <= 0.0) fail(ErrorCode::InvalidConfig, "grid spacing must be positive");
  if (n < min_points(order))
    fail(ErrorCode::GridTooSmall, "grid of " + std::to_string(n) +
                                      " points below minimum " +
                                      std::to_string(min_points(order)) +
                                      " for order " + std::to_string(order));
  if (order == 2 && n < 2 * t.rows) return tiny_order2(n, step);

  Vector h = Vector::Constant(n, step);
  for (int i = 0; i < t.weights; ++i) {
    h[i] = t.norm_boundary[i] * step;
    h[n - 1 - i] = t.norm_boundary[i] * step;
  }

  Eigen::MatrixXd dp = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(n, n);
  for (Index i = t.rows; i < n - t.rows; ++i)
    for (int o = t.lo; o <= t.hi; ++o) {
      const double c = t.stencil[o - t.lo];
      if (i + o >= 0 && i + o < n) dp(i, i + o) += c;
      if (i - o >= 0 && i - o < n) dm(i, i - o) -= c;
    }
  for (int i = 0; i < t.rows; ++i)
    for (int j = 0; j < t.width; ++j) {
      dp(i, j) = t.plus[i * t.width + j];
      dm(i, j) = t.minus[i * t.width + j];
      dp(n - 1 - i, n - 1 - j) = -t.minus[i * t.width + j];
      dm(n - 1 - i, n - 1 - j) = -t.plus[i * t.width + j];
    }
  dp /= step;
  dm /= step;
  Eigen::MatrixXd dc = 0.5 * (dp + dm);
  return {sparsify(dm), sparsify(dp), sparsify(dc), std::move(h)};
}

Vector grid_coords(Index n, double step) {
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = static_cast<double>(i) * step;
  return x;
}

double poly_error(const SparseMatrix& d, const Vector& x, int deg, Index row_lo,
                  Index row_hi) {
  const double xc = x.mean();
  double worst = 0.0;
  for (int k = 0; k <= deg; ++k) {
    Vector f(x.size()), df(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      f[i] = std::pow(x[i] - xc, k);
      df[i] = k == 0 ? 0.0 : k * std::pow(x[i] - xc, k - 1);
    }
    Vector err = d.apply(f) - df;
    const double scale = std::max(1.0, df.cwiseAbs().maxCoeff());
    for (Index i = row_lo; i < row_hi; ++i)
      worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

int measured_boundary_degree(const SparseMatrix& d, const Vector& x, int maxdeg) {
  const double xc = x.mean();
  int deg = -1;
  for (int k = 0; k <= maxdeg; ++k) {
    Vector f(x.size()), df(x.size());
    for (Index i = 0; i < x.size(); ++i) {
      f[i] = std::pow(x[i] - xc, k);
      df[i] = k == 0 ? 0.0 : k * std::pow(x[i] - xc, k - 1);
    }
    Vector err = d.apply(f) - df;
    const double scale = std::max(1.0, df.cwiseAbs().maxCoeff());
    if (err.cwiseAbs().maxCoeff() / scale > 1e-9) break;
    deg = k;
  }
  return deg;
}

AssumptionReport verify_pair(const SparseMatrix& d_minus, const SparseMatrix& d_plus,
                             const Vector& h, int order, double step, bool time_mode,
                             TimeFlavor fi = TimeFlavor::Minus,
                             TimeFlavor fj = TimeFlavor::Minus,
                             const SparseMatrix* d_center = nullptr) {
  AssumptionReport rep;
  const Index n = h.size();

  rep.min_norm_entry = h.minCoeff();
  rep.norm_positive = rep.min_norm_entry > 0.0;

  // SBP identity: H D+ + (D-)^T H = eN eN^T - e1 e1^T
  Eigen::MatrixXd res = h.asDiagonal() * Eigen::MatrixXd(d_plus.eigen()) +
                        Eigen::MatrixXd(d_minus.eigen()).transpose() *
                            Eigen::MatrixXd(h.asDiagonal());
  res(0, 0) += 1.0;
  res(n - 1, n - 1) -= 1.0;
  rep.sbp_identity_max_abs = res.cwiseAbs().maxCoeff();
  const double sbp_scale = std::max(1.0, 1.0 / step);
  rep.sbp_identity = rep.sbp_identity_max_abs <= 1e-12 * sbp_scale;

  const Vector x = grid_coords(n, step);
  const Tables t = tables_for(order);
  const Index lo = std::min<Index>(n, std::max(t.rows, -t.lo + 1));
  rep.interior_poly_rel_err =
      std::max(poly_error(d_minus, x, order, lo, std::max<Index>(lo, n - lo)),
               poly_error(d_plus, x, order, lo, std::max<Index>(lo, n - lo)));
  rep.interior_accuracy = rep.interior_poly_rel_err <= 1e-10;
  rep.boundary_row_degree = measured_boundary_degree(d_minus, x, order);

  if (!time_mode) {
    // A.4: sym(H (D+ - D-)) negative semidefinite
    Eigen::MatrixXd diff =
        h.asDiagonal() * Eigen::MatrixXd(d_plus.eigen() - d_minus.eigen());
    diff = 0.5 * (diff + diff.transpose()).eval();
    const double scale = std::max(1.0, diff.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(diff, Eigen::EigenvaluesOnly);
    rep.dissipativity_eig = es.eigenvalues().maxCoeff();
    rep.dissipativity = rep.dissipativity_eig <= 1e-10 * scale;
  } else {
    // B.1: Q = Ht D^(k) - (eM eM^T - e1 e1^T)/2 has PSD symmetric part
    double worst = 0.0;
    bool ok = true;
    for (TimeFlavor f : {fi, fj}) {
      const SparseMatrix& dk =
          (f == TimeFlavor::Minus) ? d_minus : (d_center ? *d_center : d_plus);
      Eigen::MatrixXd q = h.asDiagonal() * Eigen::MatrixXd(dk.eigen());
      q(0, 0) += 0.5;
      q(n - 1, n - 1) -= 0.5;
      Eigen::MatrixXd s = q + q.transpose();
      const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
      const double mineig = es.eigenvalues().minCoeff();
      worst = std::min(worst, mineig / scale);
      ok = ok && mineig >= -1e-10 * scale;
    }
    rep.dissipativity_eig = -worst;
    rep.dissipativity = ok;
  }
  return rep;
}

}  // namespace

int closure_rows(int order) { return tables_for(order).rows; }

Index min_points(int order) {
  if (order == 2) return 2;  // the two-point block degenerates but stays valid
  return 2 * tables_for(order).rows + 1;
}

SbpTriplet build_space_triplet(int order, Index n, double spacing) {
  CorePair p = build_pair(order, n, spacing);
  return {order, n, spacing, std::move(p.d_minus), std::move(p.d_plus), std::move(p.h)};
}

TimeOps build_time_ops(int order, Index m, double step, TimeFlavor flavor_i,
                       TimeFlavor flavor_j) {
  CorePair p = build_pair(order, m, step);
  return {order,          m,
          step,           std::move(p.d_minus),
          std::move(p.d_center), std::move(p.h),
          flavor_i,       flavor_j};
}

AssumptionReport verify_space(const SbpTriplet& t) {
  return verify_pair(t.d_minus, t.d_plus, t.h, t.order, t.spacing, false);
}

AssumptionReport verify_time(const TimeOps& t) {
  SparseMatrix dp = SparseMatrix::from_eigen(
      EigenSparse(2.0 * t.d_center.eigen() - t.d_minus.eigen()));
  return verify_pair(t.d_minus, dp, t.h, t.order, t.step, true, t.flavor_i,
                     t.flavor_j, &t.d_center);
}

SparseMatrix penalized_time_op(const TimeOps& t, TimeFlavor flavor) {
  EigenSparse d = t.op(flavor).eigen();
  SparseMatrix pen(t.m, t.m);
  pen.add(0, 0, 1.0 / t.h[0]);
  pen.finalize();
  return SparseMatrix::from_eigen(EigenSparse(d + pen.eigen()));
}

SparseMatrix adjoint_time_op(const TimeOps& t, TimeFlavor flavor) {
  EigenSparse base;
  if (flavor == TimeFlavor::Minus) {
    base = 2.0 * t.d_center.eigen() - t.d_minus.eigen();  // D+
  } else {
    base = t.d_center.eigen();
  }
  SparseMatrix pen(t.m, t.m);
  pen.add(t.m - 1, t.m - 1, 1.0 / t.h[t.m - 1]);
  pen.finalize();
  return SparseMatrix::from_eigen(EigenSparse(base - pen.eigen()));
}

SparseMatrix reversed_time_op(const TimeOps& t, TimeFlavor flavor) {
  SparseMatrix dhat = adjoint_time_op(t, flavor);
  const auto r = reversal_matrix(t.m).eigen();
  return SparseMatrix::from_eigen(EigenSparse(-(r * dhat.eigen() * r)));
}

SparseMatrix reversal_matrix(Index n) {
  SparseMatrix r(n, n);
  for (Index i = 0; i < n; ++i) r.add(i, n - 1 - i, 1.0);
  r.finalize();
  return r;
}

namespace detail {
OperatorFamily family(int order) {
  const Tables t = tables_for(order);
  return {order, t.rows, t.width};
}
}  // namespace detail

}  // namespace dpsbp

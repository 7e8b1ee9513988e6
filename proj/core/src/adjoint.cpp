#include "dpsbp/adjoint.hpp"

namespace dpsbp {

const Factorization& AdjointSystem::factorization(SolveOptions opts) const {
  if (!factor) factor.emplace(matrix, opts);
  return *factor;
}

AdjointSystem assemble_adjoint(const Discretization& d) {
  if (!d.penalty.is_unit_mu())
    fail(ErrorCode::UnsupportedPenalty,
         "the discrete adjoint is derived for mu1 = mu3 = -1 only");
  const auto& tm = d.time;
  SparseMatrix dti = reversed_time_op(tm, tm.flavor_i);
  SparseMatrix dtj = reversed_time_op(tm, tm.flavor_j);
  SparseMatrix dji =
      SparseMatrix::from_eigen(EigenSparse(dtj.eigen() * dti.eigen()));
  const SparseMatrix ix = SparseMatrix::identity(d.grid.n_space());
  const SparseMatrix it = SparseMatrix::identity(tm.m);
  EigenSparse a = kron(dji, ix).eigen() + kron(dtj, d.damping_boundary).eigen() -
                  kron(it, d.laplacian).eigen();
  AdjointSystem sys;
  sys.matrix = SparseMatrix::from_eigen(std::move(a));
  sys.grid = d.grid;
  sys.stability_proven = tm.flavor_i == tm.flavor_j;
  return sys;
}

SparseMatrix assemble_transfer(const Discretization& d) {
  const auto& tm = d.time;
  const Index m = tm.m;
  Vector e = Vector::Zero(m);
  e[0] = 1.0 / tm.h[0];
  SparseMatrix di = penalized_time_op(tm, tm.flavor_i);
  SparseMatrix dj = penalized_time_op(tm, tm.flavor_j);
  const Vector die = di.apply(e);
  // T1 = D~i Ht^{-1} e1 eM^T ; T2 = Ht^{-1} e1 eM^T ; T3 = Ht^{-1} e1 (eM^T D~j)
  SparseMatrix t1(m, m), t2(m, m), t3(m, m);
  for (Index k = 0; k < m; ++k)
    if (die[k] != 0.0) t1.add(k, m - 1, die[k]);
  t2.add(0, m - 1, 1.0 / tm.h[0]);
  const auto& dje = dj.eigen();
  for (int c = 0; c < dje.outerSize(); ++c)
    for (EigenSparse::InnerIterator it2(dje, c); it2; ++it2)
      if (it2.row() == m - 1) t3.add(0, it2.col(), it2.value() / tm.h[0]);
  t1.finalize();
  t2.finalize();
  t3.finalize();
  const SparseMatrix ix = SparseMatrix::identity(d.grid.n_space());
  EigenSparse c = kron(t1, ix).eigen() + kron(t2, d.damping_boundary).eigen() +
                  kron(t3, ix).eigen();
  return SparseMatrix::from_eigen(std::move(c));
}

Vector lagrangian_weight(const Discretization& d) {
  const Index n = d.grid.n_space();
  Vector w(d.grid.n_spacetime());
  for (Index k = 0; k < d.grid.m; ++k)
    for (Index s = 0; s < n; ++s)
      w[k * n + s] = d.time.h[k] * d.h_space[s] / d.c2[s];
  return w;
}

Vector reverse_time(const Grid& g, const Vector& v) {
  const Index n = g.n_space();
  Vector out(v.size());
  for (Index k = 0; k < g.m; ++k)
    out.segment(k * n, n) = v.segment((g.m - 1 - k) * n, n);
  return out;
}

AdjointSolution solve_adjoint(const Discretization& d, const AdjointSystem& sys,
                              const std::vector<Vector>& grad_u,
                              SolveOptions opts) {
  const int nb = d.grid.n_blocks;
  if (static_cast<int>(grad_u.size()) != nb)
    fail(ErrorCode::DimensionMismatch, "solve_adjoint: one gradient per block required");
  const Vector w = lagrangian_weight(d);
  const auto& fac = sys.factorization(opts);
  SparseMatrix transfer;
  SparseMatrix transfer_t;
  if (nb > 1) {
    transfer = assemble_transfer(d);
    transfer_t = transfer.transpose();
  }
  AdjointSolution out;
  out.lambda_bar.resize(nb);
  out.lambda.resize(nb);
  for (int b = nb - 1; b >= 0; --b) {
    Vector rhs_w = -grad_u[b];
    if (b + 1 < nb) rhs_w += transfer_t.apply(w.cwiseProduct(out.lambda[b + 1]));
    Vector forcing = reverse_time(d.grid, rhs_w.cwiseQuotient(w));
    out.lambda_bar[b] = fac.solve(forcing);
    out.lambda[b] = reverse_time(d.grid, out.lambda_bar[b]);
  }
  return out;
}

}  // namespace dpsbp

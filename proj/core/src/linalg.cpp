#include "dpsbp/linalg.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <string>
#include <utility>

namespace dpsbp {

SparseMatrix::SparseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) fail(ErrorCode::DimensionMismatch, "negative dimension");
}

void SparseMatrix::add(Index row, Index col, double value) {
  if (finalized_) fail(ErrorCode::DimensionMismatch, "add() after finalize()");
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_)
    fail(ErrorCode::DimensionMismatch, "entry (" + std::to_string(row) + "," +
                                           std::to_string(col) + ") out of range");
  if (value != 0.0) triplets_.emplace_back(row, col, value);
}

void SparseMatrix::finalize() {
  if (finalized_) return;
  mat_.resize(rows_, cols_);
  mat_.setFromTriplets(triplets_.begin(), triplets_.end());
  mat_.prune(0.0);
  mat_.makeCompressed();
  triplets_.clear();
  triplets_.shrink_to_fit();
  finalized_ = true;
}

Index SparseMatrix::nonzeros() const {
  if (!finalized_) fail(ErrorCode::DimensionMismatch, "nonzeros() before finalize()");
  return mat_.nonZeros();
}

const EigenSparse& SparseMatrix::eigen() const {
  if (!finalized_) fail(ErrorCode::DimensionMismatch, "eigen() before finalize()");
  return mat_;
}

EigenSparse& SparseMatrix::eigen() {
  if (!finalized_) fail(ErrorCode::DimensionMismatch, "eigen() before finalize()");
  return mat_;
}

Vector SparseMatrix::apply(const Vector& x) const {
  if (x.size() != cols_) fail(ErrorCode::DimensionMismatch, "apply(): size mismatch");
  return eigen() * x;
}

SparseMatrix SparseMatrix::transpose() const {
  return from_eigen(EigenSparse(eigen().transpose()));
}

SparseMatrix SparseMatrix::identity(Index n) {
  SparseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) m.add(i, i, 1.0);
  m.finalize();
  return m;
}

SparseMatrix SparseMatrix::from_eigen(EigenSparse m) {
  SparseMatrix out(m.rows(), m.cols());
  out.mat_ = std::move(m);
  out.mat_.makeCompressed();
  out.finalized_ = true;
  return out;
}

SparseMatrix SparseMatrix::diagonal(const Vector& d) {
  SparseMatrix m(d.size(), d.size());
  for (Index i = 0; i < d.size(); ++i) m.add(i, i, d[i]);
  m.finalize();
  return m;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  const Index rows = a.rows() * b.rows();
  const Index cols = a.cols() * b.cols();
  if (a.rows() != 0 && rows / a.rows() != b.rows())
    fail(ErrorCode::DimensionOverflow, "kron: dimension overflow");
  const auto& ae = a.eigen();
  const auto& be = b.eigen();
  EigenSparse out(rows, cols);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(ae.nonZeros()) * be.nonZeros());
  for (int ka = 0; ka < ae.outerSize(); ++ka) {
    for (EigenSparse::InnerIterator ia(ae, ka); ia; ++ia) {
      for (int kb = 0; kb < be.outerSize(); ++kb) {
        for (EigenSparse::InnerIterator ib(be, kb); ib; ++ib) {
          trips.emplace_back(ia.row() * be.rows() + ib.row(),
                             ia.col() * be.cols() + ib.col(),
                             ia.value() * ib.value());
        }
      }
    }
  }
  out.setFromTriplets(trips.begin(), trips.end());
  return SparseMatrix::from_eigen(std::move(out));
}

double weighted_norm(const Vector& h, const Vector& v) {
  return std::sqrt(weighted_dot(h, v, v));
}

double weighted_dot(const Vector& h, const Vector& u, const Vector& v) {
  if (h.size() != u.size() || h.size() != v.size())
    fail(ErrorCode::DimensionMismatch, "weighted_dot: size mismatch");
  return (u.array() * h.array() * v.array()).sum();
}

struct Factorization::Impl {
  EigenSparse a;
  Eigen::SparseLU<EigenSparse, Eigen::COLAMDOrdering<int>> lu;
  bool use_lu = true;
  bool lu_ok = false;
  // iterative fallback state
  Eigen::GMRES<EigenSparse, Eigen::IncompleteLUT<double>> gmres;
};

Factorization::Factorization(const SparseMatrix& a, SolveOptions opts)
    : impl_(std::make_unique<Impl>()), opts_(opts) {
  if (a.rows() != a.cols())
    fail(ErrorCode::DimensionMismatch, "factorize: matrix not square");
  impl_->a = a.eigen();
  impl_->use_lu = a.rows() <= opts_.direct_limit;
  if (impl_->use_lu) {
    impl_->lu.compute(impl_->a);
    if (impl_->lu.info() == Eigen::Success) {
      impl_->lu_ok = true;
      return;
    }
    if (impl_->lu.info() == Eigen::NumericalIssue)
      fail(ErrorCode::SingularMatrix, "sparse LU: matrix is singular to working precision");
    impl_->use_lu = false;  // fall through to GMRES
  }
  impl_->gmres.setMaxIterations(opts_.gmres_max_iters);
  impl_->gmres.set_restart(opts_.gmres_restart);
  impl_->gmres.setTolerance(opts_.tol);
  impl_->gmres.preconditioner().setDroptol(1e-6);
  impl_->gmres.preconditioner().setFillfactor(30);
  impl_->gmres.compute(impl_->a);
  if (impl_->gmres.info() != Eigen::Success)
    fail(ErrorCode::SingularMatrix, "GMRES setup failed (singular preconditioner?)");
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Vector Factorization::solve(const Vector& rhs, SolveReport* report) const {
  if (rhs.size() != impl_->a.rows())
    fail(ErrorCode::DimensionMismatch, "solve: rhs size mismatch");
  Vector x;
  SolveReport rep;
  const double rhs_norm = rhs.norm();
  if (impl_->use_lu && impl_->lu_ok) {
    x = impl_->lu.solve(rhs);
    rep.method = SolveMethod::DirectLU;
    rep.iterations = 0;
  } else {
    x = impl_->gmres.solve(rhs);
    rep.method = SolveMethod::GMRES;
    rep.iterations = static_cast<int>(impl_->gmres.iterations());
  }
  rep.relative_residual =
      rhs_norm > 0.0 ? (impl_->a * x - rhs).norm() / rhs_norm : (impl_->a * x).norm();
  if (!(rep.relative_residual <= opts_.tol)) {
    // one refinement pass for the direct path before giving up
    if (rep.method == SolveMethod::DirectLU) {
      Vector r = rhs - impl_->a * x;
      x += impl_->lu.solve(r);
      rep.relative_residual =
          rhs_norm > 0.0 ? (impl_->a * x - rhs).norm() / rhs_norm : (impl_->a * x).norm();
    }
    if (!(rep.relative_residual <= opts_.tol))
      fail(ErrorCode::NoConvergence,
           "solve: relative residual " + std::to_string(rep.relative_residual) +
               " exceeds tolerance " + std::to_string(opts_.tol));
  }
  if (report) *report = rep;
  return x;
}

std::pair<Vector, SolveReport> solve(const SparseMatrix& a, const Vector& rhs,
                                     SolveOptions opts) {
  if (opts.tol <= 0.0) fail(ErrorCode::InvalidConfig, "solve: tol must be positive");
  Factorization f(a, opts);
  SolveReport rep;
  Vector x = f.solve(rhs, &rep);
  return {std::move(x), rep};
}

}  // namespace dpsbp

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <memory>
#include <vector>

#include "dpsbp/errors.hpp"

namespace dpsbp {

using Vector = Eigen::VectorXd;
using EigenSparse = Eigen::SparseMatrix<double>;
using Index = std::int64_t;

/// Compressed sparse matrix with an explicit build/finalize life cycle.
/// Entries may be added in any order; duplicates are summed on finalize().
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols);

  void add(Index row, Index col, double value);
  void finalize();
  bool finalized() const { return finalized_; }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index nonzeros() const;

  const EigenSparse& eigen() const;
  EigenSparse& eigen();

  Vector apply(const Vector& x) const;
  SparseMatrix transpose() const;

  static SparseMatrix identity(Index n);
  static SparseMatrix from_eigen(EigenSparse m);
  /// Diagonal matrix from a vector of diagonal entries.
  static SparseMatrix diagonal(const Vector& d);

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  bool finalized_ = false;
  std::vector<Eigen::Triplet<double>> triplets_;
  EigenSparse mat_;
};

enum class SolveMethod { DirectLU, GMRES };

struct SolveReport {
  SolveMethod method = SolveMethod::DirectLU;
  int iterations = 0;
  double relative_residual = 0.0;
};

struct SolveOptions {
  double tol = 1e-11;
  /// Systems larger than this use GMRES instead of a direct factorization.
  Index direct_limit = 200000;
  int gmres_restart = 50;
  int gmres_max_iters = 2000;
};

/// Kronecker product of two finalized sparse matrices.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// sqrt(v^T H v) for a positive diagonal weight vector h.
double weighted_norm(const Vector& h, const Vector& v);

/// Weighted inner product (u, v)_H = u^T H v.
double weighted_dot(const Vector& h, const Vector& u, const Vector& v);

/// Reusable factorization (or preconditioned iterative context) for repeated
/// solves against the same matrix.
class Factorization {
 public:
  Factorization(const SparseMatrix& a, SolveOptions opts = {});
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;

  Vector solve(const Vector& rhs, SolveReport* report = nullptr) const;
  const SolveOptions& options() const { return opts_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SolveOptions opts_;
};

/// One-shot solve; verifies the relative residual against opts.tol and throws
/// NoConvergence if it cannot be met.
std::pair<Vector, SolveReport> solve(const SparseMatrix& a, const Vector& rhs,
                                     SolveOptions opts = {});

}  // namespace dpsbp

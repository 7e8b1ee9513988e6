#include <doctest.h>

#include <random>

#include "dpsbp/linalg.hpp"

using namespace dpsbp;

namespace {

SparseMatrix random_sparse(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SparseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    m.add(i, i, 4.0 + u(rng));  // diagonally dominant
    m.add(i, (i + 3) % n, u(rng));
    m.add(i, (i * 7 + 1) % n, u(rng));
  }
  m.finalize();
  return m;
}

Vector random_vec(Index n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m.eigen()); }

}  // namespace

TEST_CASE("kron of identities is the identity") {
  SparseMatrix k = kron(SparseMatrix::identity(2), SparseMatrix::identity(3));
  CHECK(k.rows() == 6);
  CHECK(dense(k).isApprox(Eigen::MatrixXd::Identity(6, 6)));
}

TEST_CASE("kron rank structure: e1 e1^T x I2 has two nonzeros") {
  SparseMatrix e(2, 2);
  e.add(0, 0, 1.0);
  e.finalize();
  SparseMatrix k = kron(e, SparseMatrix::identity(2));
  CHECK(k.nonzeros() == 2);
}

TEST_CASE("kron mixed-product identity on random data") {
  std::mt19937 rng(7);
  SparseMatrix a = random_sparse(5, rng);
  SparseMatrix b = random_sparse(4, rng);
  Vector x = random_vec(5, rng), y = random_vec(4, rng);
  Vector xy(20);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) xy[i * 4 + j] = x[i] * y[j];
  Vector lhs = kron(a, b).apply(xy);
  Vector ax = a.apply(x), by = b.apply(y);
  Vector rhs(20);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 4; ++j) rhs[i * 4 + j] = ax[i] * by[j];
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("kron associativity on small random triples") {
  std::mt19937 rng(11);
  SparseMatrix a = random_sparse(3, rng), b = random_sparse(2, rng),
               c = random_sparse(4, rng);
  auto left = dense(kron(kron(a, b), c));
  auto right = dense(kron(a, kron(b, c)));
  CHECK((left - right).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("solve: identity system returns the rhs") {
  Vector r = random_vec(10, *new std::mt19937(3));
  auto [x, rep] = solve(SparseMatrix::identity(10), r);
  CHECK((x - r).norm() == doctest::Approx(0.0));
  CHECK(rep.method == SolveMethod::DirectLU);
}

TEST_CASE("solve: random well-conditioned system meets the tolerance") {
  std::mt19937 rng(19);
  SparseMatrix a = random_sparse(50, rng);
  Vector b = random_vec(50, rng);
  auto [x, rep] = solve(a, b);
  CHECK(rep.relative_residual <= 1e-11);
}

TEST_CASE("solve: zero rhs gives the zero solution") {
  std::mt19937 rng(23);
  SparseMatrix a = random_sparse(12, rng);
  auto [x, rep] = solve(a, Vector::Zero(12));
  CHECK(x.norm() == 0.0);
}

TEST_CASE("solve: singular matrix is rejected") {
  SparseMatrix a(3, 3);
  a.add(0, 0, 1.0);
  a.add(1, 1, 1.0);  // row/col 2 empty
  a.finalize();
  CHECK_THROWS_AS(solve(a, Vector::Ones(3)), Error);
}

TEST_CASE("solve: GMRES path engages above the direct limit") {
  std::mt19937 rng(29);
  SparseMatrix a = random_sparse(80, rng);
  Vector b = random_vec(80, rng);
  SolveOptions opts;
  opts.direct_limit = 10;
  auto [x, rep] = solve(a, b, opts);
  CHECK(rep.method == SolveMethod::GMRES);
  CHECK(rep.relative_residual <= opts.tol);
}

TEST_CASE("weighted_norm basics") {
  Vector h = Vector::Ones(2);
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(weighted_norm(h, v) == doctest::Approx(5.0));
  CHECK(weighted_norm(h, Vector::Zero(2)) == 0.0);
  Vector h3(3), w(3);
  h3 << 1.0, 2.0, 1.0;
  w << 1.0, 1.0, 1.0;
  CHECK(weighted_norm(h3, w) == doctest::Approx(2.0));
  CHECK_THROWS_AS(weighted_norm(h, Vector::Zero(3)), Error);
}

TEST_CASE("sparse matrix build contract") {
  SparseMatrix m(2, 2);
  m.add(0, 1, 2.0);
  CHECK_THROWS_AS(m.add(2, 0, 1.0), Error);  // out of range
  CHECK_THROWS_AS(m.eigen(), Error);         // not finalized yet
  m.add(0, 1, 3.0);                          // duplicate accumulates
  m.finalize();
  CHECK(m.eigen().coeff(0, 1) == doctest::Approx(5.0));
  CHECK_THROWS_AS(m.add(1, 1, 1.0), Error);  // add after finalize
}

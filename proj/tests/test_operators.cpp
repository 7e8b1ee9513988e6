#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "dpsbp/operators.hpp"

using namespace dpsbp;

namespace {
Eigen::MatrixXd dense(const SparseMatrix& m) { return Eigen::MatrixXd(m.eigen()); }
}  // namespace

TEST_CASE("spatial triplet certification across orders and sizes") {
  for (int order : {2, 4, 6, 8}) {
    for (Index n : {Index(21), Index(41), Index(81)}) {
      SbpTriplet t = build_space_triplet(order, n, 2.0 / double(n - 1));
      AssumptionReport r = verify_space(t);
      INFO("order ", order, " n ", n);
      CHECK(r.norm_positive);
      CHECK(r.sbp_identity);
      CHECK(r.dissipativity);
      CHECK(r.interior_accuracy);
      CHECK(r.sbp_identity_max_abs <=
            1e-12 * std::max(1.0, double(n - 1) / 2.0));
    }
  }
}

TEST_CASE("smallest admissible grids still certify") {
  for (int order : {2, 4, 6, 8}) {
    const Index n = min_points(order) > 2 ? min_points(order) : 4;
    SbpTriplet t = build_space_triplet(order, n, 0.1);
    CHECK(verify_space(t).pass());
  }
}

TEST_CASE("D- annihilates constants") {
  SbpTriplet t = build_space_triplet(2, 50, 2.0 / 49.0);
  Vector ones = Vector::Ones(50);
  CHECK(t.d_minus.apply(ones).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(t.d_plus.apply(ones).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("quadrature integrates constants exactly") {
  // H-weights on [0,2]: (1,1)_H = 2
  SbpTriplet t = build_space_triplet(4, 21, 0.1);
  CHECK(t.h.sum() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("unsupported order and tiny grids are rejected") {
  CHECK_THROWS_AS(build_space_triplet(3, 30, 0.1), Error);
  CHECK_THROWS_AS(build_space_triplet(5, 30, 0.1), Error);
  CHECK_THROWS_AS(build_space_triplet(4, 7, 0.1), Error);
  CHECK_THROWS_AS(build_space_triplet(8, 15, 0.1), Error);
  try {
    build_space_triplet(4, 5, 0.1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridTooSmall);
  }
}

TEST_CASE("forced violations are detected, not thrown") {
  SbpTriplet t = build_space_triplet(4, 31, 0.05);
  SUBCASE("zeroed norm entry fails A.1") {
    t.h[0] = 0.0;
    AssumptionReport r = verify_space(t);
    CHECK_FALSE(r.norm_positive);
  }
  SUBCASE("replacing D+ by D- breaks the dual-pair identity") {
    t.d_plus = t.d_minus;
    AssumptionReport r = verify_space(t);
    CHECK_FALSE(r.sbp_identity);
  }
}

TEST_CASE("time operators: B.1 certification") {
  for (int order : {2, 4, 6, 8}) {
    for (auto f : {TimeFlavor::Minus, TimeFlavor::Center}) {
      TimeOps t = build_time_ops(order, 21, 0.1, f, f);
      AssumptionReport r = verify_time(t);
      INFO("order ", order);
      CHECK(r.pass());
    }
  }
}

TEST_CASE("centered flavor has a vanishing symmetric part") {
  TimeOps t = build_time_ops(4, 21, 0.1, TimeFlavor::Center, TimeFlavor::Center);
  Eigen::MatrixXd q = t.h.asDiagonal() * dense(t.d_center);
  q(0, 0) += 0.5;
  q(20, 20) -= 0.5;
  Eigen::MatrixXd s = q + q.transpose();
  CHECK(s.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("degenerate two-point order-2 block") {
  TimeOps t = build_time_ops(2, 2, 0.1, TimeFlavor::Minus, TimeFlavor::Minus);
  AssumptionReport r = verify_time(t);
  CHECK(r.norm_positive);
  CHECK(r.sbp_identity);
  CHECK(r.dissipativity);
}

TEST_CASE("time operators annihilate constants") {
  for (int order : {2, 4, 6, 8}) {
    TimeOps t = build_time_ops(order, 25, 0.05, TimeFlavor::Minus, TimeFlavor::Center);
    Vector ones = Vector::Ones(25);
    CHECK(t.d_minus.apply(ones).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.d_center.apply(ones).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("penalized time operator") {
  TimeOps t = build_time_ops(4, 21, 0.1, TimeFlavor::Minus, TimeFlavor::Minus);
  SparseMatrix dt = penalized_time_op(t, TimeFlavor::Minus);
  SUBCASE("constant input hits only the first entry") {
    Vector v = dt.apply(Vector::Ones(21));
    CHECK(v[0] == doctest::Approx(1.0 / t.h[0]));
    CHECK(v.tail(20).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rank-one difference from the plain operator") {
    Eigen::MatrixXd diff = dense(dt) - dense(t.op(TimeFlavor::Minus));
    CHECK(diff(0, 0) == doctest::Approx(1.0 / t.h[0]));
    diff(0, 0) = 0.0;
    CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("adjoint time operator identities") {
  std::mt19937 rng(5);
  for (int order : {2, 4, 6}) {
    for (auto fi : {TimeFlavor::Minus, TimeFlavor::Center}) {
      for (auto fj : {TimeFlavor::Minus, TimeFlavor::Center}) {
        TimeOps t = build_time_ops(order, 23, 0.07, fi, fj);
        Eigen::MatrixXd ht = t.h.asDiagonal();
        Eigen::MatrixXd dti = dense(penalized_time_op(t, fi));
        Eigen::MatrixXd dtj = dense(penalized_time_op(t, fj));
        Eigen::MatrixXd dhi = dense(adjoint_time_op(t, fi));
        Eigen::MatrixXd dhj = dense(adjoint_time_op(t, fj));
        INFO("order ", order);
        // Ht D~j = -(D^j)^T Ht
        CHECK((ht * dtj + dhj.transpose() * ht).cwiseAbs().maxCoeff() <
              1e-12 / t.step);
        // Ht D~i D~j = (D^j D^i)^T Ht
        CHECK((ht * dti * dtj - (dhj * dhi).transpose() * ht)
                  .cwiseAbs()
                  .maxCoeff() < 1e-11 / (t.step * t.step));
      }
    }
  }
}

TEST_CASE("adjoint of Minus flavor is built from D+") {
  TimeOps t = build_time_ops(4, 21, 0.1, TimeFlavor::Minus, TimeFlavor::Minus);
  Eigen::MatrixXd dplus = 2.0 * dense(t.d_center) - dense(t.d_minus);
  Eigen::MatrixXd dhat = dense(adjoint_time_op(t, TimeFlavor::Minus));
  dhat(20, 20) += 1.0 / t.h[20];
  CHECK((dhat - dplus).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adjoint applied to constants hits only the last entry") {
  TimeOps t = build_time_ops(6, 25, 0.05, TimeFlavor::Center, TimeFlavor::Center);
  Vector v = adjoint_time_op(t, TimeFlavor::Center).apply(Vector::Ones(25));
  CHECK(v[24] == doctest::Approx(-1.0 / t.h[24]));
  CHECK(v.head(24).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("time reversal") {
  SUBCASE("R is an involution") {
    auto r = reversal_matrix(9);
    CHECK(dense(kron(r, SparseMatrix::identity(1)))
              .cwiseAbs()
              .sum() == doctest::Approx(9.0));
    Eigen::MatrixXd rr = dense(r) * dense(r);
    CHECK(rr.isApprox(Eigen::MatrixXd::Identity(9, 9)));
  }
  SUBCASE("reversed operator equals the penalized forward operator") {
    // With a reversal-symmetric family the tau-grid matrices coincide with the
    // t-grid ones, so -R D^ R must reproduce D~ entrywise.
    for (int order : {2, 4, 6, 8}) {
      for (auto f : {TimeFlavor::Minus, TimeFlavor::Center}) {
        TimeOps t = build_time_ops(order, 21, 0.1, f, f);
        Eigen::MatrixXd rev = dense(reversed_time_op(t, f));
        Eigen::MatrixXd pen = dense(penalized_time_op(t, f));
        INFO("order ", order);
        CHECK((rev - pen).cwiseAbs().maxCoeff() < 1e-13 / t.step);
      }
    }
  }
  SUBCASE("reversed operator on constants") {
    TimeOps t = build_time_ops(4, 21, 0.1, TimeFlavor::Minus, TimeFlavor::Minus);
    Vector v = reversed_time_op(t, TimeFlavor::Minus).apply(Vector::Ones(21));
    CHECK(v[0] == doctest::Approx(1.0 / t.h[0]));
    CHECK(v.tail(20).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("averaged operator keeps the dissipativity sign") {
  // (f, (D+ - D-) f)_H <= 0 exercised through verify_space; the averaged
  // operator itself must satisfy the centered identity Q + Q^T = 0.
  SbpTriplet t = build_space_triplet(4, 31, 0.05);
  Eigen::MatrixXd dc = 0.5 * (dense(t.d_plus) + dense(t.d_minus));
  Eigen::MatrixXd q = t.h.asDiagonal() * dc;
  q(0, 0) += 0.5;
  q(30, 30) -= 0.5;
  CHECK((q + q.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("boundary closure degree is reported") {
  SbpTriplet t = build_space_triplet(4, 31, 0.05);
  AssumptionReport r = verify_space(t);
  CHECK(r.boundary_row_degree >= 2);  // p/2 closure
}

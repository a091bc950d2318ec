#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "helpers.hpp"
#include "kamnf/blockmat.hpp"

using namespace kamnf;
using namespace kamnf::testing;

TEST_CASE("hermitian_eig: hand oracles") {
  Eigen::MatrixXcd H(2, 2);
  H << 0, 1, 1, 0;
  EigResult e = hermitian_eig(H);
  CHECK(e.values[0] == doctest::Approx(-1.0));
  CHECK(e.values[1] == doctest::Approx(1.0));

  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(3, 3);
  D(0, 0) = 3;
  D(1, 1) = 1;
  D(2, 2) = 2;
  e = hermitian_eig(D);
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(2.0));
  CHECK(e.values[2] == doctest::Approx(3.0));
}

TEST_CASE("hermitian_eig: random Hermitian reconstruction and unitarity") {
  Rng r(5);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 3 + trial;
    Eigen::MatrixXcd H(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) H(i, j) = r.cx();
    H = ((H + H.adjoint()) / 2).eval();
    EigResult e = hermitian_eig(H);
    Eigen::MatrixXcd R = H * e.vectors - e.vectors * e.values.asDiagonal();
    CHECK(R.norm() < 1e-11 * std::max(1.0, H.norm()));
    CHECK((e.vectors.adjoint() * e.vectors -
           Eigen::MatrixXcd::Identity(d, d))
              .norm() < 1e-12);
    for (int i = 0; i + 1 < d; ++i) CHECK(e.values[i] <= e.values[i + 1]);
  }
}

namespace {
// strip imaginary parts and resymmetrize (normal form is a real family)
BlockMatrix realified(BlockMatrix A) {
  for (auto& [k, m] : A.blocks) m = m.real().cast<Cx>().eval();
  A.symmetrize();
  return A;
}
}  // namespace

TEST_CASE("nf_project: cells project onto span{I, J}") {
  auto cl = kg_clustering(2);
  // cluster 0 holds two modes; fill the off-diagonal mode cell (0,1) with
  // [[1,2],[3,4]] and its symmetric partner, so the I part is tr/2 = 2.5 and
  // the J part is (3-2)/2 = 0.5
  BlockMatrix A(*cl, true);
  Eigen::MatrixXcd& blk = A.at(0, 0);
  blk.setZero();
  blk(0, 2) = 1;
  blk(0, 3) = 2;
  blk(1, 2) = 3;
  blk(1, 3) = 4;
  blk(2, 0) = 1;
  blk(3, 0) = 2;
  blk(2, 1) = 3;
  blk(3, 1) = 4;
  BlockMatrix P = nf_project(A);
  const Eigen::MatrixXcd& q = *P.find(0, 0);
  CHECK(q(0, 2).real() == doctest::Approx(2.5));
  CHECK(q(0, 3).real() == doctest::Approx(-0.5));
  CHECK(q(1, 2).real() == doctest::Approx(0.5));
  CHECK(q(1, 3).real() == doctest::Approx(2.5));
  // symmetric partner cell carries the opposite J part
  CHECK(q(2, 1).real() == doctest::Approx(-0.5));
  CHECK(q(3, 0).real() == doctest::Approx(0.5));
  CHECK(is_normal_form(P));
}

TEST_CASE("nf_project of a random real symmetric matrix is normal form") {
  auto cl = kg_clustering(4);
  Rng r(11);
  BlockMatrix A = realified(random_block_matrix(*cl, r));
  CHECK(is_normal_form(nf_project(A)));
  CHECK_FALSE(is_normal_form(A));
}

TEST_CASE("complex change of variables round-trips") {
  auto cl = kg_clustering(4);
  Rng r(3);
  BlockMatrix A = random_block_matrix(*cl, r);
  BlockMatrix back = from_complex(to_complex(A));
  back *= Cx(-1);
  back += A;
  CHECK(back.max_abs() < 1e-14);

  ModeVector z = random_mode_vector(*cl, r);
  ModeVector zb = from_complex(to_complex(z));
  zb *= Cx(-1);
  zb += z;
  CHECK(zb.max_abs() < 1e-14);
}

TEST_CASE("quadratic form is invariant under the complex change") {
  auto cl = kg_clustering(3);
  Rng r(7);
  BlockMatrix A = random_block_matrix(*cl, r);
  ModeVector z = random_mode_vector(*cl, r);
  ModeVector zc = to_complex(z);
  const Cx q_real = apply(A, z).dot(z);
  const Cx q_cx = apply(to_complex(A), zc).dot(zc);
  CHECK(std::abs(q_real - q_cx) < 1e-12);
}

TEST_CASE("q_of of a normal-form matrix is Hermitian") {
  auto cl = kg_clustering(4);
  Rng r(9);
  BlockMatrix A = nf_project(realified(random_block_matrix(*cl, r)));
  BlockMatrix Q = q_of(A);
  for (const auto& [k, M] : Q.blocks) {
    REQUIRE(k.first == k.second);
    CHECK((M - M.adjoint()).norm() < 1e-13);
  }
}

TEST_CASE("mul/apply agree with dense arithmetic on a small clustering") {
  auto cl = kg_clustering(3);
  Rng r(13);
  BlockMatrix A = random_block_matrix(*cl, r, 0.5);
  BlockMatrix B = random_block_matrix(*cl, r, 0.5);
  ModeVector z = random_mode_vector(*cl, r);
  // (AB) z == A (B z)
  ModeVector lhs = apply(mul(A, B), z);
  ModeVector rhs = apply(A, apply(B, z));
  rhs *= Cx(-1);
  rhs += lhs;
  CHECK(rhs.max_abs() < 1e-12);
}

TEST_CASE("J actions: J_left/J_right match applied_J and J^2 = -1") {
  auto cl = kg_clustering(3);
  Rng r(15);
  BlockMatrix A = random_block_matrix(*cl, r);
  ModeVector z = random_mode_vector(*cl, r);
  // (J A) z == J (A z)
  ModeVector lhs = apply(J_left(A), z);
  ModeVector rhs = apply(A, z).applied_J();
  rhs *= Cx(-1);
  rhs += lhs;
  CHECK(rhs.max_abs() < 1e-13);
  // (A J) z == A (J z)
  lhs = apply(J_right(A), z);
  rhs = apply(A, z.applied_J());
  rhs *= Cx(-1);
  rhs += lhs;
  CHECK(rhs.max_abs() < 1e-13);
  ModeVector jj = z.applied_J().applied_J();
  jj += z;
  CHECK(jj.max_abs() < 1e-14);
}

namespace {

struct Draw {
  BlockMatrix A, B;
  ModeVector x, y;
};

Draw make_draw(const Clustering& cl, Rng& r) {
  return {random_block_matrix(cl, r, 0.8), random_block_matrix(cl, r, 0.8),
          random_mode_vector(cl, r, 1.2), random_mode_vector(cl, r, 1.2)};
}

}  // namespace

TEST_CASE("bracket inequalities hold with the truncated constants") {
  auto cl = kg_clustering(10);
  const double beta = 0.25, s = 2.0;
  BracketConstants c = bracket_constants(*cl, beta, s);
  Rng r(42);
  for (int t = 0; t < 25; ++t) {
    Draw d = make_draw(*cl, r);
    const double Ab = norm_beta(d.A, beta), Ap = norm_beta_plus(d.A, beta);
    const double Bb = norm_beta(d.B, beta), Bp = norm_beta_plus(d.B, beta);
    const BlockMatrix AB = mul(d.A, d.B);
    CHECK(norm_beta(AB, beta) <= c.c1 * Ap * Bb * (1 + 1e-12));
    CHECK(norm_beta_plus(AB, beta) <= c.c2 * Ap * Bp * (1 + 1e-12));
    const ModeVector Ax = apply(d.A, d.x);
    CHECK(Ax.norm_beta(beta) <= c.c3 * Ap * d.x.norm_beta(0.0) * (1 + 1e-12));
    CHECK(std::abs(d.x.dot(d.y)) <=
          c.c4 * d.x.norm_beta(beta) * d.y.norm_beta_plus(beta) * (1 + 1e-12));
    CHECK(std::abs(d.x.dot(d.y)) <=
          c.c5 * d.x.norm_s(s) * d.y.norm_beta(beta) * (1 + 1e-12));
    CHECK(Ax.norm_beta_plus(beta) <= c.c6 * Ap * d.x.norm_s(s) * (1 + 1e-12));
    CHECK(Ax.norm_beta_plus(beta) <=
          c.c7 * Ap * d.x.norm_beta_plus(beta) * (1 + 1e-12));
    CHECK(norm_beta(outer(d.x, d.y), beta) <=
          c.c8 * d.x.norm_beta(beta) * d.y.norm_beta(beta) * (1 + 1e-12));
  }
}

TEST_CASE("block matrix binary dump round-trips") {
  auto cl = kg_clustering(4);
  Rng r(21);
  BlockMatrix A = random_block_matrix(*cl, r);
  const char* path = "blockmat_roundtrip.bin";
  dump_blockmat(path, A, 0.25);
  BlockMatrix B = load_blockmat(path, *cl);
  std::remove(path);
  B *= Cx(-1);
  B += A;
  CHECK(B.max_abs() < 1e-15);
}

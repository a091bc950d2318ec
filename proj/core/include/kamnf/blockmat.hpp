#pragma once
// Block-structured matrices over cluster pairs, mode vectors, the HS-block
// norm calculus, normal-form projection and the real <-> complex change of
// variables used by the homological equation.
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kamnf/modes.hpp"

namespace kamnf {

using Cx = std::complex<double>;

// Vector over the truncated mode set; each mode carries a 2-component cell
// (p,q) in the real representation or (xi,eta) after complexification.
// Coefficients are complex in general (they arise as Fourier coefficients);
// "real" objects satisfy a conjugation symmetry handled at the series level.
struct ModeVector {
  const Clustering* cl = nullptr;
  std::vector<Eigen::VectorXcd> v;  // per cluster, length 2*dim

  ModeVector() = default;
  explicit ModeVector(const Clustering& c);

  bool empty_struct() const { return cl == nullptr; }
  double norm_s(double s) const;          // weighted l2
  double norm_dual_s(double s) const;     // Cauchy-Schwarz dual of norm_s
  double norm_beta(double beta) const;    // sup_a |zeta_[a]| w^beta
  double norm_beta_plus(double beta) const;  // sup modes w^{beta+1}|zeta_a|
  double max_abs() const;

  ModeVector& operator+=(const ModeVector& o);
  ModeVector& operator*=(Cx c);
  ModeVector conjugated() const;
  Cx dot(const ModeVector& o) const;  // bilinear sum of products
  void apply_J_inplace();             // per mode sigma2: (p,q) -> (-q, p)
  ModeVector applied_J() const;
  bool is_zero(double tol = 0.0) const;
};

struct BlockMatrix {
  const Clustering* cl = nullptr;
  bool sym = false;  // transpose-mirrored storage maintained by set_block
  std::map<std::pair<int, int>, Eigen::MatrixXcd> blocks;

  BlockMatrix() = default;
  explicit BlockMatrix(const Clustering& c, bool symmetric = false)
      : cl(&c), sym(symmetric) {}

  const Eigen::MatrixXcd* find(int a, int b) const;
  Eigen::MatrixXcd& at(int a, int b);  // creates zero block on demand
  void set_block(int a, int b, const Eigen::MatrixXcd& M);  // mirrors if sym
  void add_block(int a, int b, const Eigen::MatrixXcd& M);
  void symmetrize();  // (A + A^T)/2

  BlockMatrix& operator+=(const BlockMatrix& o);
  BlockMatrix& operator*=(Cx c);
  BlockMatrix transposed() const;
  BlockMatrix conjugated() const;
  double max_abs() const;
  bool is_zero(double tol = 0.0) const;
  void prune(double tol);
};

double norm_beta(const BlockMatrix& A, double beta);
double norm_beta_plus(const BlockMatrix& A, double beta);

BlockMatrix mul(const BlockMatrix& A, const BlockMatrix& B);
ModeVector apply(const BlockMatrix& A, const ModeVector& z);
// Left action by the per-mode symplectic unit: (J A), and the right action
// (A J); both preserve the block structure.
BlockMatrix J_left(const BlockMatrix& A);
BlockMatrix J_right(const BlockMatrix& A);
BlockMatrix outer(const ModeVector& X, const ModeVector& Y);

/// Orthogonal projection of the diagonal blocks onto the normal-form class:
// each per-mode-pair 2x2 cell projected (Frobenius) onto span{I, J},
// off-diagonal cluster blocks dropped.
BlockMatrix nf_project(const BlockMatrix& A);
bool is_normal_form(const BlockMatrix& A, double tol = 1e-12);

/// Conjugation by the direct product of U_a = (1/sqrt2) [[1,1],[-i,i]]:
// returns the coefficient matrix of the same quadratic form in the
// (xi,eta)-interleaved basis. from_complex inverts it.
BlockMatrix to_complex(const BlockMatrix& A);
BlockMatrix from_complex(const BlockMatrix& C);
// For a normal-form A, the Hermitian d x d matrix Q of q = <xi, Q eta>:
// the (xi,eta) cells of to_complex(A).
BlockMatrix q_of(const BlockMatrix& A);

ModeVector to_complex(const ModeVector& z);
ModeVector from_complex(const ModeVector& z);

struct EigResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXcd vectors; // columns, unitary, deterministic phase
};
// Cyclic Jacobi for dense Hermitian blocks.
EigResult hermitian_eig(const Eigen::MatrixXcd& H);

// Weight-sum constants that control the bilinear bracket estimates
// (truncated over the weight set of a clustering; weights max(w,1),
// cluster dims for the vector variants).
struct BracketConstants {
  double c1, c2, c3, c4, c5, c6, c7, c8;
};
BracketConstants bracket_constants(const Clustering& cl, double beta, double s);

void dump_blockmat(const std::string& path, const BlockMatrix& A, double beta);
BlockMatrix load_blockmat(const std::string& path, const Clustering& cl);

}  // namespace kamnf

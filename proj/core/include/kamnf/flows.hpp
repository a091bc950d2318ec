#pragma once
// Time-t Hamiltonian flow of a jet generator in the structured form
//   (r, theta, zeta) -> (L + S r, K, T + U zeta).
// theta flows autonomously; zeta is affine along the theta path; r is an
// affine function of r0 plus a quadratic polynomial in zeta0. K and T are
// expanded as theta-Fourier series on a grid; U, S and the r-part are
// integrated pointwise on demand (they enter only transport and the
// symplecticity check, both pointwise operations).
#include "kamnf/poly.hpp"

namespace kamnf {

struct FlowMap {
  int n = 2;
  const Clustering* cl = nullptr;
  Jet gen;        // the generating jet
  double t = 1;   // flow time
  int steps = 128;
  FourierSeries<Eigen::VectorXcd> K;  // displacement K(theta) - theta
  FourierSeries<ModeVector> T;        // affine zeta-part at zeta0 = 0, r0 = 0

  Eigen::VectorXcd K_of(const Eigen::VectorXcd& theta) const;
  // dense linear zeta-part U(theta) in the flat real representation
  Eigen::MatrixXcd U_of(const Eigen::VectorXcd& theta) const;
  ModeVector T_of(const Eigen::VectorXcd& theta) const;
  Eigen::MatrixXcd S_of(const Eigen::VectorXcd& theta) const;  // n x n r-part
  Eigen::VectorXcd L_of(const Eigen::VectorXcd& theta,
                        const ModeVector& zeta) const;  // r-part at r0 = 0
};

// flat real-representation order: clusters ascending, cells (p,q) interleaved
int flat_dim(const Clustering& cl);
Eigen::VectorXcd to_flat(const ModeVector& z);
ModeVector from_flat(const Clustering& cl, const Eigen::VectorXcd& v);
Eigen::MatrixXcd to_dense(const BlockMatrix& A);

struct Point {
  Eigen::VectorXcd r, theta;
  ModeVector zeta;
};

// margins eta (analyticity width) and nu (zeta radius) must be positive and
// the generator must satisfy the smallness bound [S]^{s,beta+} <= nu^2 eta / 2
// at (sigma, mu); throws std::runtime_error otherwise. fit_series = false
// skips the theta-grid expansion of K and T (transport and the symplecticity
// check integrate pointwise and never read them).
FlowMap build_flow(const Jet& S_jet, double t, double eta, double nu,
                   double sigma, double mu, double s, double beta,
                   bool fit_series = true);

Point transport(const FlowMap& phi, const Point& x);

// Hilbert-Schmidt defect of DPhi^T Omega DPhi - Omega at (r,zeta) = 0
double symplecticity_defect(const FlowMap& phi, const Eigen::VectorXcd& theta);

// Lie pullback with the structural smallness precondition
// [S]^{s,beta+} <= (mu - mu')^2 (sigma - sigma') / 2.
PolyHamiltonian pullback_checked(const PolyHamiltonian& h, const Jet& S_jet,
                                 int M_lie, double sigma, double sigma_p,
                                 double mu, double mu_p, double s, double beta,
                                 double tol_abs, double drop_tol,
                                 double t_scale = 1.0);

}  // namespace kamnf

#pragma once
// Concrete truncated Hamiltonians: the wave equation on the 2-sphere and the
// 2-D quantum harmonic oscillator. Basis evaluation, quadrature assembly of
// the perturbation into degree-capped factored form, and the Hessian tables
// used by the structural block-norm checks.
#include <memory>

#include "kamnf/homo.hpp"
#include "kamnf/poly.hpp"

namespace kamnf {

// real orthonormal spherical harmonic of degree j, order l (|l| <= j),
// at colatitude theta / azimuth phi
double sph_harmonic(int j, int l, double theta, double phi);

// L2(R)-orthonormal Hermite function of the odd-index convention:
// hermite(i, x) = h_{(i-1)/2}(x) for odd i >= 1
double hermite(int i, double x);

// plane basis Phi_{j,l} = phi_{2l-1} ox phi_{2j-2l+1}, 1 <= l <= j
double qho_basis(int j, int l, double x1, double x2);

// K_j(x, x) = sum_l Phi_{j,l}(x)^2
double qho_kernel(int j, double x1, double x2);

struct SphereQuad {
  std::vector<double> theta, phi, w;  // flattened product rule
};
// Gauss-Legendre in cos(theta), order 2 W_max + 4, times a uniform azimuthal
// grid of 4 W_max + 4 points
SphereQuad sphere_quadrature(int W_max);

struct PlaneQuad {
  std::vector<double> x1, x2, w;  // weights include the e^{x^2} correction
};
PlaneQuad plane_quadrature(int nodes_per_axis);

enum class KGNonlin { U2, U3, SIN_U };

struct KGProblem {
  SpectralModel model;  // kind = KG_S2
  AdmissibleSet A;
  KGNonlin g = KGNonlin::U2;
};

enum class QHONonlin { NLS_PLUS, NLS_MINUS, HARTREE };

struct QHOProblem {
  SpectralModel model;  // kind = QHO_R2
  AdmissibleSet A;
  QHONonlin F = QHONonlin::NLS_PLUS;
  double beta_reg = 0.0;     // T^{-beta} regularization exponent
  double hartree_width = 1.0;
};

struct BuiltModel {
  std::shared_ptr<const Clustering> cl;  // normal modes, admissible removed
  NormalFormHam h0;
  PolyHamiltonian f;
};

BuiltModel kg_build(const KGProblem& prob, const Eigen::VectorXd& rho,
                    int W_max, int D_max, int K_max);
BuiltModel qho_build(const QHOProblem& prob, const Eigen::VectorXd& rho,
                     int W_max, int D_max, int K_max);

// Direct-quadrature Hessian cross-check tables: Hilbert-Schmidt norms of the
// cluster blocks of M_ab = int dg/du(u1) Psi_a Psi_b / sqrt(la lb) (sphere)
// and of int |u1|^2 Phi_a Phi_b / (w_a w_b)^beta (plane), with u1 the
// zeta = 0, theta = 0 torus profile.
Eigen::MatrixXd kg_hessian_hs(const KGProblem& prob, int W_max);
Eigen::MatrixXd qho_hessian_hs(const QHOProblem& prob, int W_max);

}  // namespace kamnf

#pragma once
// Blockwise solves of the homological equation {h, S} + f^T = hhat + R for a
// normal-form h = <omega, r> + 1/2 <A zeta, zeta>, with Fourier truncation N,
// small-divisor thresholds kappa, and the normal-form correction hhat.
#include <limits>

#include "kamnf/jets.hpp"

namespace kamnf {

struct NormalFormHam {
  Eigen::VectorXd omega;
  BlockMatrix A;  // real symmetric, on normal form
};

struct FamilyAudit {
  double min_div = std::numeric_limits<double>::infinity();  // normalized
  KIdx k{0, 0, 0, 0};
  int a = -1, b = -1;  // cluster indices of the witness (-1 if n/a)
  bool excluded = false;

  void observe(double normalized, const KIdx& kk, int aa, int bb,
               double kappa) {
    if (normalized < min_div) {
      min_div = normalized;
      k = kk;
      a = aa;
      b = bb;
    }
    if (normalized < kappa) excluded = true;
  }
};

struct DivisorAudit {
  // 0: <k,w>; 1: <k,w>+-alpha (weight w_a); 2: <k,w>+-(alpha+beta)
  // (weight w_a+w_b); 3: <k,w>+alpha-beta (weight 1+|w_a-w_b|)
  std::array<FamilyAudit, 4> fam;
  bool any_excluded() const {
    return fam[0].excluded || fam[1].excluded || fam[2].excluded ||
           fam[3].excluded;
  }
  DivisorAudit& merge(const DivisorAudit& o);
  std::string to_json() const;
};

struct ScalarSolution {
  FourierSeries<Cx> phi;
  FourierSeries<Cx> R;  // Fourier tail beyond N
  DivisorAudit audit;
};
// solves <omega, d_theta phi> = psi (psi mean-free):
// phi_hat(k) = -i psi_hat(k) / <omega,k>, retained for 0 < |k|_1 <= N
ScalarSolution solve_scalar(const FourierSeries<Cx>& psi,
                            const Eigen::VectorXd& omega, double kappa, int N,
                            double sigma, double sigma_p);

struct LinearSolution {
  FourierSeries<ModeVector> S;
  FourierSeries<ModeVector> R;
  DivisorAudit audit;
};
// solves (i<k,omega> I - A J) S_hat(k) = -F_hat(k) per cluster
LinearSolution solve_linear(const FourierSeries<ModeVector>& F,
                            const NormalFormHam& h, const Clustering& cl,
                            double kappa, int N, double sigma, double sigma_p);

struct QuadraticSolution {
  FourierSeries<BlockMatrix> S;
  BlockMatrix B;  // normal-form correction (k = 0, diagonal xi-eta part)
  FourierSeries<BlockMatrix> R;
  DivisorAudit audit;
};
// solves i<k,omega> S - A J S + S J A = -F + B delta_{k0} + R
QuadraticSolution solve_quadratic(const FourierSeries<BlockMatrix>& F,
                                  const NormalFormHam& h, const Clustering& cl,
                                  double kappa, int N, double sigma,
                                  double sigma_p);

struct HomoSolution {
  Jet S;
  Cx c;                  // mean of f_theta
  Eigen::VectorXcd chi;  // mean of f_r
  BlockMatrix B;
  Jet R;
  DivisorAudit audit;
};
HomoSolution solve_homological(const Jet& f, const NormalFormHam& h,
                               double kappa, int N, double sigma,
                               double sigma_p);

// evaluates hhat + R - ({h,S} + f^T) componentwise and returns the majorant
// of the mismatch at sigma_p (substitution oracle for sign conventions)
double homological_residual(const Jet& f, const NormalFormHam& h,
                            const HomoSolution& sol, int K_cap, double sigma_p);

}  // namespace kamnf

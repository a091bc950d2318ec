#pragma once
// Jet Hamiltonians f^T = f_theta + <f_r, r> + <f_zeta, zeta>
//                      + 1/2 <f_zetazeta zeta, zeta>
// with theta-Fourier coefficients, their majorant norm and Poisson bracket.
#include <string>

#include "kamnf/fourier.hpp"

namespace kamnf {

struct Jet {
  int n = 2;
  const Clustering* cl = nullptr;
  FourierSeries<Cx> ftheta;
  FourierSeries<Eigen::VectorXcd> fr;
  FourierSeries<ModeVector> fzeta;
  FourierSeries<BlockMatrix> fzz;  // symmetric coefficients

  Jet() = default;
  Jet(int n_, const Clustering& c) : n(n_), cl(&c) {
    ftheta.n = fr.n = fzeta.n = fzz.n = n_;
  }

  Jet& operator+=(const Jet& o);
  Jet& operator*=(Cx s);
  bool is_zero(double tol = 0.0) const;
  double tail_total() const {
    return ftheta.tail + fr.tail + fzeta.tail + fzz.tail;
  }
  void symmetrize_real();
  void prune(int K_cap, double tol, double sigma);
  // value at a phase-space point (complex-capable for strip sampling)
  Cx eval(const Eigen::VectorXcd& r, const Eigen::VectorXcd& theta,
          const ModeVector& zeta) const;
  // gradients at a point (used by flows)
  Eigen::VectorXcd grad_r(const Eigen::VectorXcd& theta) const;
  ModeVector grad_zeta(const Eigen::VectorXcd& theta,
                       const ModeVector& zeta) const;
  Eigen::VectorXcd grad_theta(const Eigen::VectorXcd& r,
                              const Eigen::VectorXcd& theta,
                              const ModeVector& zeta) const;
};

double jet_norm(const Jet& f, double sigma, double mu, double s, double beta,
                bool plus);
// the individual majorant components entering jet_norm:
// {value, r-gradient, zeta-gradient (l2_s), zeta-gradient (cluster-sup),
//  zeta-Hessian, zeta-gradient plus, zeta-Hessian plus}
std::array<double, 7> jet_norm_components(const Jet& f, double sigma,
                                          double mu, double s, double beta);

// Exact Poisson bracket of two jets; the family of jet monomials is closed
// under the bracket. K_cap / sigma control tail accounting.
Jet poisson_jet(const Jet& f, const Jet& g, int K_cap, double sigma);

// fixture round-trip
std::string jet_to_json(const Jet& f, int K_max);
Jet jet_from_json(const std::string& text, const Clustering& cl);

// seeded random real jet with Fourier support |k|_1 <= K and coefficient
// amplitude ~ amp (deterministic across runs)
Jet random_jet(int n, const Clustering& cl, int K, double amp,
               std::uint64_t seed);

}  // namespace kamnf

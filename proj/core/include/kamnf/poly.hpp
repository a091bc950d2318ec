#pragma once
// Degree-capped polynomial Hamiltonians. The jet part (2|alpha| + m <= 2) is
// dense; higher-degree terms are kept in factored form
//   c(theta) * r^alpha * prod_i F_i(zeta),
// with each factor either a linear form <v, zeta> or a quadratic form
// <Q zeta, zeta>. Quadrature assembly produces exactly such terms (one per
// node), and Poisson brackets against jets keep the family closed; whatever
// falls below threshold or above the caps is charged to a tail budget.
#include <memory>
#include <vector>

#include "kamnf/jets.hpp"

namespace kamnf {

struct Factor {
  enum Kind { VEC, QUAD } kind = VEC;
  ModeVector v;   // VEC: value <v, zeta>
  BlockMatrix Q;  // QUAD: value zeta^T Q zeta
  long id = 0;    // creation sequence number; used as a deterministic sort
                  // key where pointer order would depend on heap layout
  // factors are immutable and widely shared; norm bounds are memoized here
  // (keyed by the (s, beta) pair they were computed for)
  mutable std::shared_ptr<const void> bounds_cache;
  mutable double bounds_s = -1, bounds_beta = -1;
};
using FactorPtr = std::shared_ptr<const Factor>;

FactorPtr make_vec_factor(ModeVector v);
FactorPtr make_quad_factor(BlockMatrix Q);

struct HighTerm {
  KIdx alpha{0, 0, 0, 0};  // r-multidegree
  FourierSeries<Cx> coeff;
  std::vector<FactorPtr> factors;

  int rdeg() const { return alpha[0] + alpha[1] + alpha[2] + alpha[3]; }
  int zdeg() const;                       // m, quadratic factors count 2
  int deg() const { return 2 * rdeg() + zdeg(); }
};

struct PolyHamiltonian {
  Jet jet;
  std::vector<HighTerm> terms;
  int D_max = 4;
  int K_max = 12;
  double tail = 0;  // majorant mass surrendered by caps/thresholds

  PolyHamiltonian() = default;
  PolyHamiltonian(int n, const Clustering& c) : jet(n, c) {}
  explicit PolyHamiltonian(Jet j) : jet(std::move(j)) {}

  double tail_total() const { return tail + jet.tail_total(); }
  PolyHamiltonian& operator+=(const PolyHamiltonian& o);
  PolyHamiltonian& operator*=(Cx s);
  Cx eval(const Eigen::VectorXcd& r, const Eigen::VectorXcd& theta,
          const ModeVector& zeta) const;
  // merge terms with identical (alpha, factor list); drop terms whose
  // majorant at (sigma, mu) is below tol, charging the tail
  void compact(double sigma, double mu, double s, double tol);
};

inline Jet jet_of(const PolyHamiltonian& h) { return h.jet; }

// full majorant norm: componentwise jet majorants plus high-term bounds
double poly_norm(const PolyHamiltonian& h, double sigma, double mu, double s,
                 double beta, bool plus);
// majorant of the degree >= 3 part alone (the Taylor remainder h - h^T)
double poly_high_norm(const PolyHamiltonian& h, double sigma, double mu,
                      double s, double beta, bool plus);

struct SplitReport {
  Jet jet;
  double remainder_norm = 0;  // [h - h^T] at (sigma, mu_prime)
  double full_norm = 0;       // [h] at (sigma, mu)
};
SplitReport split_remainder(const PolyHamiltonian& h, double sigma, double mu,
                            double mu_prime, double s, double beta);

// {S, h} for a jet S against a full polynomial; outputs of jet degree fold
// exactly into the result's jet, the rest stays factored.
// drop_tol is an absolute majorant threshold at (sigma, mu).
PolyHamiltonian poisson(const Jet& S, const PolyHamiltonian& h, double sigma,
                        double mu, double s, double drop_tol);

// Lie-series pullback h o Phi_S^1 = sum_m ad_S^m h / m!   (ad_S h = {S, h})
// Terms are added until the m-th term's norm falls below tol_abs or M_lie is
// reached; the first omitted term's majorant is charged to the tail.
PolyHamiltonian pullback(const PolyHamiltonian& h, const Jet& S, int M_lie,
                         double sigma, double mu, double s, double beta,
                         double tol_abs, double drop_tol,
                         double t_scale = 1.0);

}  // namespace kamnf

#pragma once
// Gauss quadrature rules used for spatial integrals and the Lie-step
// time integral.
#include <vector>

namespace kamnf {

struct QuadRule {
  std::vector<double> x, w;
};

// Gauss-Legendre on [-1, 1]
QuadRule gauss_legendre(int n);
// Gauss-Hermite with weight e^{-x^2} on (-inf, inf)
QuadRule gauss_hermite(int n);

}  // namespace kamnf

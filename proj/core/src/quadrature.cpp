#include "kamnf/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace kamnf {

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n < 1");
  QuadRule q;
  q.x.resize(n);
  q.w.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int m = 2; m <= n; ++m) {
        double p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.x[i] = -x;
    q.x[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    q.w[i] = w;
    q.w[n - 1 - i] = w;
  }
  return q;
}

QuadRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n < 1");
  QuadRule q;
  q.x.resize(n);
  q.w.resize(n);
  const double pi = std::acos(-1.0);
  // orthonormal Hermite recurrence: H~_{m+1} = x sqrt(2/(m+1)) H~_m
  //                                            - sqrt(m/(m+1)) H~_{m-1}
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x;
    if (i == 0)
      x = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6);
    else if (i == 1)
      x = q.x[n - 1] - 1.14 * std::pow(double(n), 0.426) / q.x[n - 1];
    else if (i == 2)
      x = 1.86 * q.x[n - 2] - 0.86 * q.x[n - 1];
    else if (i == 3)
      x = 1.91 * q.x[n - 3] - 0.91 * q.x[n - 2];
    else
      x = 2.0 * q.x[n - i] - q.x[n - i + 1];
    double dp = 0;
    for (int it = 0; it < 200; ++it) {
      double p0 = std::pow(pi, -0.25), p1 = std::sqrt(2.0) * x * p0;
      for (int m = 1; m < n; ++m) {
        double p2 = x * std::sqrt(2.0 / (m + 1)) * p1 -
                    std::sqrt(double(m) / (m + 1)) * p0;
        p0 = p1;
        p1 = p2;
      }
      dp = std::sqrt(2.0 * n) * p0;  // derivative of orthonormal H~_n
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-14 * (1 + std::abs(x))) break;
    }
    q.x[n - 1 - i] = x;
    q.x[i] = -x;
    double w = 2.0 / (dp * dp);
    q.w[n - 1 - i] = w;
    q.w[i] = w;
  }
  if (n % 2 == 1) q.x[n / 2] = 0.0;
  return q;
}

}  // namespace kamnf

#pragma once
// Truncated theta-Fourier series with majorant accounting. Coefficients are
// scalars, n-vectors, mode vectors or block matrices; all "norms over the
// torus" are replaced by the computable majorant sum_k |c_k| e^{sigma |k|_1}.
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>

#include <Eigen/Dense>

#include "kamnf/blockmat.hpp"

namespace kamnf {

using KIdx = std::array<int, 4>;  // padded with zeros beyond n

inline int l1(const KIdx& k) {
  return std::abs(k[0]) + std::abs(k[1]) + std::abs(k[2]) + std::abs(k[3]);
}
inline KIdx kneg(const KIdx& k) { return {-k[0], -k[1], -k[2], -k[3]}; }
inline KIdx kadd(const KIdx& a, const KIdx& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}

// coefficient helpers
inline Cx conj_coeff(Cx c) { return std::conj(c); }
inline Eigen::VectorXcd conj_coeff(const Eigen::VectorXcd& c) {
  return c.conjugate();
}
inline ModeVector conj_coeff(const ModeVector& c) { return c.conjugated(); }
inline BlockMatrix conj_coeff(const BlockMatrix& c) { return c.conjugated(); }

inline double coeff_amp(Cx c) { return std::abs(c); }
inline double coeff_amp(const Eigen::VectorXcd& c) {
  return c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
}
inline double coeff_amp(const ModeVector& c) { return c.max_abs(); }
inline double coeff_amp(const BlockMatrix& c) { return c.max_abs(); }

template <class T>
struct FourierSeries {
  int n = 2;
  std::map<KIdx, T> c;
  double tail = 0;  // majorant mass dropped by truncations

  bool has(const KIdx& k) const { return c.count(k) != 0; }
  const T* find(const KIdx& k) const {
    auto it = c.find(k);
    return it == c.end() ? nullptr : &it->second;
  }

  void add(const KIdx& k, const T& x) {
    auto it = c.find(k);
    if (it == c.end())
      c.emplace(k, x);
    else
      it->second += x;
  }
  void add(const KIdx& k, T&& x) {
    auto it = c.find(k);
    if (it == c.end())
      c.emplace(k, std::move(x));
    else
      it->second += x;
  }

  FourierSeries& operator+=(const FourierSeries& o) {
    for (const auto& [k, x] : o.c) add(k, x);
    tail += o.tail;
    return *this;
  }
  FourierSeries& operator*=(Cx s) {
    for (auto& [k, x] : c) x *= s;
    tail *= std::abs(s);
    return *this;
  }

  // d/dtheta_i : multiply by i k_i
  FourierSeries derivative(int i) const {
    FourierSeries out;
    out.n = n;
    for (const auto& [k, x] : c) {
      if (k[i] == 0) continue;
      T y = x;
      y *= Cx(0, k[i]);
      out.c.emplace(k, std::move(y));
    }
    return out;
  }

  template <class F>
  double majorant(double sigma, F&& norm_fn) const {
    double acc = 0;
    for (const auto& [k, x] : c) acc += norm_fn(x) * std::exp(sigma * l1(k));
    return acc;
  }
  double majorant_amp(double sigma) const {
    return majorant(sigma, [](const T& x) { return coeff_amp(x); });
  }

  T eval(const Eigen::VectorXcd& theta, const T& zero) const {
    T acc = zero;
    for (const auto& [k, x] : c) {
      Cx ph = 0;
      for (int i = 0; i < n; ++i) ph += Cx(k[i]) * theta[i];
      T y = x;
      y *= std::exp(Cx(0, 1) * ph);
      acc += y;
    }
    return acc;
  }

  // reality symmetrization: c_k <- (c_k + conj c_{-k}) / 2
  void symmetrize_real() {
    std::map<KIdx, T> out;
    for (const auto& [k, x] : c) {
      T y = x;
      if (const T* m = find(kneg(k))) {
        y += conj_coeff(*m);
        y *= Cx(0.5);
      } else {
        y *= Cx(0.5);
      }
      out.emplace(k, std::move(y));
    }
    // keys whose mirror was missing contribute a new conjugate coefficient
    for (const auto& [k, x] : c)
      if (!out.count(kneg(k))) {
        T y = conj_coeff(x);
        y *= Cx(0.5);
        out.emplace(kneg(k), std::move(y));
      }
    c = std::move(out);
  }

  // drop coefficients with |k|_1 > K_cap or amplitude <= tol, charging the
  // majorant at sigma to the tail budget
  void prune(int K_cap, double tol, double sigma) {
    for (auto it = c.begin(); it != c.end();) {
      const double amp = coeff_amp(it->second);
      if (l1(it->first) > K_cap || amp <= tol) {
        tail += amp * std::exp(sigma * l1(it->first));
        it = c.erase(it);
      } else {
        ++it;
      }
    }
  }
};

// product of a scalar series with any series
template <class T>
FourierSeries<T> conv(const FourierSeries<Cx>& a, const FourierSeries<T>& b,
                      int K_cap, double sigma) {
  FourierSeries<T> out;
  out.n = b.n;
  for (const auto& [ka, xa] : a.c)
    for (const auto& [kb, xb] : b.c) {
      KIdx k = kadd(ka, kb);
      T y = xb;
      y *= xa;
      if (l1(k) > K_cap)
        out.tail += coeff_amp(y) * std::exp(sigma * l1(k));
      else
        out.add(k, std::move(y));
    }
  return out;
}

// sum_i a_i(theta) * d/dtheta_i b  ==  sum over pairs (i k2 . a(k1)) b(k2)
template <class T>
FourierSeries<T> directional_conv(const FourierSeries<Eigen::VectorXcd>& a,
                                  const FourierSeries<T>& b, int K_cap,
                                  double sigma) {
  FourierSeries<T> out;
  out.n = b.n;
  for (const auto& [ka, xa] : a.c)
    for (const auto& [kb, xb] : b.c) {
      Cx w = 0;
      for (int i = 0; i < a.n; ++i) w += Cx(0, kb[i]) * xa[i];
      if (w == Cx(0)) continue;
      KIdx k = kadd(ka, kb);
      T y = xb;
      y *= w;
      if (l1(k) > K_cap)
        out.tail += coeff_amp(y) * std::exp(sigma * l1(k));
      else
        out.add(k, std::move(y));
    }
  return out;
}

}  // namespace kamnf

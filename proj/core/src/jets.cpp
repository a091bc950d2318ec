#include "kamnf/jets.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace kamnf {

Jet& Jet::operator+=(const Jet& o) {
  ftheta += o.ftheta;
  fr += o.fr;
  fzeta += o.fzeta;
  fzz += o.fzz;
  return *this;
}

Jet& Jet::operator*=(Cx s) {
  ftheta *= s;
  fr *= s;
  fzeta *= s;
  fzz *= s;
  return *this;
}

bool Jet::is_zero(double tol) const {
  auto below = [&](auto const& series) {
    for (const auto& [k, x] : series.c)
      if (coeff_amp(x) > tol) return false;
    return true;
  };
  return below(ftheta) && below(fr) && below(fzeta) && below(fzz);
}

void Jet::symmetrize_real() {
  ftheta.symmetrize_real();
  fr.symmetrize_real();
  fzeta.symmetrize_real();
  fzz.symmetrize_real();
}

void Jet::prune(int K_cap, double tol, double sigma) {
  ftheta.prune(K_cap, tol, sigma);
  fr.prune(K_cap, tol, sigma);
  fzeta.prune(K_cap, tol, sigma);
  fzz.prune(K_cap, tol, sigma);
}

Cx Jet::eval(const Eigen::VectorXcd& r, const Eigen::VectorXcd& theta,
             const ModeVector& zeta) const {
  Cx acc = ftheta.eval(theta, Cx(0));
  Eigen::VectorXcd rr = fr.eval(theta, Eigen::VectorXcd::Zero(n).eval());
  acc += rr.cwiseProduct(r).sum();
  if (cl) {
    ModeVector fz = fzeta.eval(theta, ModeVector(*cl));
    acc += fz.dot(zeta);
    BlockMatrix M(*cl, true);
    M = fzz.eval(theta, M);
    acc += 0.5 * apply(M, zeta).dot(zeta);
  }
  return acc;
}

Eigen::VectorXcd Jet::grad_r(const Eigen::VectorXcd& theta) const {
  return fr.eval(theta, Eigen::VectorXcd::Zero(n).eval());
}

ModeVector Jet::grad_zeta(const Eigen::VectorXcd& theta,
                          const ModeVector& zeta) const {
  ModeVector g = fzeta.eval(theta, ModeVector(*cl));
  BlockMatrix M(*cl, true);
  M = fzz.eval(theta, M);
  g += apply(M, zeta);
  return g;
}

Eigen::VectorXcd Jet::grad_theta(const Eigen::VectorXcd& r,
                                 const Eigen::VectorXcd& theta,
                                 const ModeVector& zeta) const {
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(n);
  for (int i = 0; i < n; ++i) {
    FourierSeries<Cx> dth = ftheta.derivative(i);
    g[i] += dth.eval(theta, Cx(0));
    FourierSeries<Eigen::VectorXcd> dr = fr.derivative(i);
    g[i] += dr.eval(theta, Eigen::VectorXcd::Zero(n).eval())
                .cwiseProduct(r)
                .sum();
    if (cl) {
      FourierSeries<ModeVector> dz = fzeta.derivative(i);
      g[i] += dz.eval(theta, ModeVector(*cl)).dot(zeta);
      FourierSeries<BlockMatrix> dzz = fzz.derivative(i);
      BlockMatrix M(*cl, true);
      M = dzz.eval(theta, M);
      g[i] += 0.5 * apply(M, zeta).dot(zeta);
    }
  }
  return g;
}

std::array<double, 7> jet_norm_components(const Jet& f, double sigma,
                                          double mu, double s, double beta) {
  std::array<double, 7> c{};
  c[0] = f.ftheta.majorant(sigma, [](Cx x) { return std::abs(x); });
  c[1] = mu * mu *
         f.fr.majorant(sigma,
                       [](const Eigen::VectorXcd& x) { return x.norm(); });
  c[2] = mu * f.fzeta.majorant(
                  sigma, [&](const ModeVector& x) { return x.norm_s(s); });
  c[3] = mu * f.fzeta.majorant(
                  sigma, [&](const ModeVector& x) { return x.norm_beta(beta); });
  c[4] = mu * mu *
         f.fzz.majorant(
             sigma, [&](const BlockMatrix& x) { return norm_beta(x, beta); });
  c[5] = mu * f.fzeta.majorant(sigma, [&](const ModeVector& x) {
    return x.norm_beta_plus(beta);
  });
  c[6] = mu * mu * f.fzz.majorant(sigma, [&](const BlockMatrix& x) {
    return norm_beta_plus(x, beta);
  });
  return c;
}

double jet_norm(const Jet& f, double sigma, double mu, double s, double beta,
                bool plus) {
  const auto c = jet_norm_components(f, sigma, mu, s, beta);
  double v = std::max({c[0], c[1], c[2], c[3], c[4]});
  if (plus) v += c[5] + c[6];
  return v;
}

Jet poisson_jet(const Jet& f, const Jet& g, int K_cap, double sigma) {
  Jet out(f.n, *(f.cl ? f.cl : g.cl));
  // h1 - h2 : sum_i f_r,i d/dtheta_i (g component) minus (f <-> g)
  auto dir = [&](auto& dst, const FourierSeries<Eigen::VectorXcd>& a,
                 const auto& b, Cx sign) {
    auto t = directional_conv(a, b, K_cap, sigma);
    t *= sign;
    dst += t;
  };
  dir(out.ftheta, f.fr, g.ftheta, 1);
  dir(out.ftheta, g.fr, f.ftheta, -1);
  dir(out.fr, f.fr, g.fr, 1);
  dir(out.fr, g.fr, f.fr, -1);
  dir(out.fzeta, f.fr, g.fzeta, 1);
  dir(out.fzeta, g.fr, f.fzeta, -1);
  dir(out.fzz, f.fr, g.fzz, 1);
  dir(out.fzz, g.fr, f.fzz, -1);

  // h3 = <J grad_zeta f, grad_zeta g>
  for (const auto& [kf, vf] : f.fzeta.c) {
    ModeVector Jf = vf.applied_J();
    // scalar part <J f_zeta, g_zeta>
    for (const auto& [kg, vg] : g.fzeta.c) {
      KIdx k = kadd(kf, kg);
      const Cx val = Jf.dot(vg);
      if (l1(k) > K_cap)
        out.ftheta.tail += std::abs(val) * std::exp(sigma * l1(k));
      else
        out.ftheta.add(k, val);
    }
    // + <g_zetazeta J f_zeta, zeta>
    for (const auto& [kg, Mg] : g.fzz.c) {
      KIdx k = kadd(kf, kg);
      ModeVector t = apply(Mg, Jf);
      if (l1(k) > K_cap)
        out.fzeta.tail += t.max_abs() * std::exp(sigma * l1(k));
      else
        out.fzeta.add(k, std::move(t));
    }
  }
  // - <zeta, f_zetazeta J g_zeta>
  for (const auto& [kg, vg] : g.fzeta.c) {
    ModeVector Jg = vg.applied_J();
    for (const auto& [kf, Mf] : f.fzz.c) {
      KIdx k = kadd(kf, kg);
      ModeVector t = apply(Mf, Jg);
      t *= Cx(-1);
      if (l1(k) > K_cap)
        out.fzeta.tail += t.max_abs() * std::exp(sigma * l1(k));
      else
        out.fzeta.add(k, std::move(t));
    }
  }
  // quadratic part: M = g_zz J f_zz - f_zz J g_zz
  for (const auto& [kf, Mf] : f.fzz.c) {
    BlockMatrix JMf = J_left(Mf);  // J f_zz
    for (const auto& [kg, Mg] : g.fzz.c) {
      KIdx k = kadd(kf, kg);
      BlockMatrix t = mul(Mg, JMf);
      // (g J f)^T = -f J g for symmetric f, g, so t + t^T = g J f - f J g
      t += t.transposed();
      if (l1(k) > K_cap)
        out.fzz.tail += t.max_abs() * std::exp(sigma * l1(k));
      else
        out.fzz.add(k, std::move(t));
    }
  }
  return out;
}

static nlohmann::json cx_to_json(Cx v) {
  return nlohmann::json::array({v.real(), v.imag()});
}
static Cx cx_from_json(const nlohmann::json& j) {
  return Cx(j.at(0).get<double>(), j.at(1).get<double>());
}

std::string jet_to_json(const Jet& f, int K_max) {
  nlohmann::json out;
  out["n"] = f.n;
  out["K_max"] = K_max;
  auto terms = nlohmann::json::array();
  auto karr = [&](const KIdx& k) {
    auto a = nlohmann::json::array();
    for (int i = 0; i < f.n; ++i) a.push_back(k[i]);
    return a;
  };
  for (const auto& [k, x] : f.ftheta.c)
    terms.push_back({{"k", karr(k)}, {"part", "theta"}, {"data", cx_to_json(x)}});
  for (const auto& [k, x] : f.fr.c) {
    auto d = nlohmann::json::array();
    for (int i = 0; i < x.size(); ++i) d.push_back(cx_to_json(x[i]));
    terms.push_back({{"k", karr(k)}, {"part", "r"}, {"data", d}});
  }
  for (const auto& [k, x] : f.fzeta.c) {
    auto d = nlohmann::json::array();
    for (const auto& seg : x.v)
      for (int i = 0; i < seg.size(); ++i) d.push_back(cx_to_json(seg[i]));
    terms.push_back({{"k", karr(k)}, {"part", "zeta"}, {"data", d}});
  }
  for (const auto& [k, x] : f.fzz.c) {
    auto d = nlohmann::json::array();
    for (const auto& [key, M] : x.blocks) {
      auto ent = nlohmann::json::array();
      for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) ent.push_back(cx_to_json(M(i, j)));
      d.push_back({{"wa", x.cl->levels[key.first].w},
                   {"wb", x.cl->levels[key.second].w},
                   {"values", ent}});
    }
    terms.push_back({{"k", karr(k)}, {"part", "zetazeta"}, {"data", d}});
  }
  out["terms"] = terms;
  return out.dump();
}

Jet jet_from_json(const std::string& text, const Clustering& cl) {
  nlohmann::json j = nlohmann::json::parse(text);
  Jet f(j.at("n").get<int>(), cl);
  for (const auto& t : j.at("terms")) {
    KIdx k{0, 0, 0, 0};
    auto ka = t.at("k");
    for (std::size_t i = 0; i < ka.size(); ++i) k[i] = ka[i].get<int>();
    const std::string part = t.at("part").get<std::string>();
    const auto& d = t.at("data");
    if (part == "theta") {
      f.ftheta.add(k, cx_from_json(d));
    } else if (part == "r") {
      Eigen::VectorXcd v(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) v[i] = cx_from_json(d[i]);
      f.fr.add(k, v);
    } else if (part == "zeta") {
      ModeVector v(cl);
      std::size_t p = 0;
      for (auto& seg : v.v)
        for (int i = 0; i < seg.size(); ++i) seg[i] = cx_from_json(d.at(p++));
      f.fzeta.add(k, std::move(v));
    } else if (part == "zetazeta") {
      BlockMatrix M(cl, true);
      for (const auto& blk : d) {
        const int a = cl.cluster_of_weight(blk.at("wa").get<int>());
        const int b = cl.cluster_of_weight(blk.at("wb").get<int>());
        Eigen::MatrixXcd B(2 * cl.levels[a].dim(), 2 * cl.levels[b].dim());
        const auto& vals = blk.at("values");
        std::size_t p = 0;
        for (int i = 0; i < B.rows(); ++i)
          for (int jj = 0; jj < B.cols(); ++jj)
            B(i, jj) = cx_from_json(vals.at(p++));
        M.blocks[{a, b}] = std::move(B);
      }
      f.fzz.add(k, std::move(M));
    } else {
      throw std::invalid_argument("jet fixture: unknown part " + part);
    }
  }
  return f;
}

namespace {
void k_boxes(int n, int K, KIdx cur, int axis, std::vector<KIdx>& out) {
  if (axis == n) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int i = 0; i < axis; ++i) used += std::abs(cur[i]);
  for (int v = -(K - used); v <= K - used; ++v) {
    cur[axis] = v;
    k_boxes(n, K, cur, axis + 1, out);
  }
}
}  // namespace

Jet random_jet(int n, const Clustering& cl, int K, double amp,
               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto u = [&] { return 2.0 * (double(rng()) / double(rng.max())) - 1.0; };
  Jet f(n, cl);
  std::vector<KIdx> ks;
  k_boxes(n, K, {0, 0, 0, 0}, 0, ks);
  for (const KIdx& k : ks) {
    const double dk = amp * std::exp(-double(l1(k)));
    f.ftheta.add(k, Cx(u(), u()) * dk);
    Eigen::VectorXcd vr(n);
    for (int i = 0; i < n; ++i) vr[i] = Cx(u(), u()) * dk;
    f.fr.add(k, std::move(vr));
    ModeVector z(cl);
    for (int a = 0; a < cl.n_clusters(); ++a) {
      const double sc = dk / std::pow(cl.weight(a), 2.0);
      for (int i = 0; i < z.v[a].size(); ++i) z.v[a][i] = Cx(u(), u()) * sc;
    }
    f.fzeta.add(k, std::move(z));
    BlockMatrix M(cl, true);
    for (int a = 0; a < cl.n_clusters(); ++a)
      for (int b = 0; b < cl.n_clusters(); ++b) {
        const double sc =
            dk / std::pow(cl.weight(a) * cl.weight(b), 2.0);
        Eigen::MatrixXcd B(2 * cl.levels[a].dim(), 2 * cl.levels[b].dim());
        for (int i = 0; i < B.rows(); ++i)
          for (int jj = 0; jj < B.cols(); ++jj) B(i, jj) = Cx(u(), u()) * sc;
        M.blocks[{a, b}] = std::move(B);
      }
    M.symmetrize();
    f.fzz.add(k, std::move(M));
  }
  f.symmetrize_real();
  return f;
}

}  // namespace kamnf

#include "kamnf/modes.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace kamnf {

bool AdmissibleSet::contains(ModeIndex a) const { return index_of(a) >= 0; }

int AdmissibleSet::index_of(ModeIndex a) const {
  for (std::size_t i = 0; i < modes.size(); ++i)
    if (modes[i] == a) return static_cast<int>(i);
  return -1;
}

int Clustering::total_modes() const {
  int t = 0;
  for (const auto& c : levels) t += c.dim();
  return t;
}

int Clustering::cluster_of_weight(int w) const {
  for (int i = 0; i < n_clusters(); ++i)
    if (levels[i].w == w) return i;
  return -1;
}

int Clustering::flat_index(ModeIndex a) const {
  int off = 0;
  for (const auto& c : levels) {
    for (int i = 0; i < c.dim(); ++i)
      if (c.modes[i] == a) return off + i;
    off += c.dim();
  }
  return -1;
}

Clustering enumerate_modes(const SpectralModel& model, int W_max) {
  if (W_max < 1) throw std::invalid_argument("enumerate_modes: W_max < 1");
  Clustering cl;
  cl.W_max = W_max;
  for (int w = 1; w <= W_max; ++w) {
    Cluster c;
    c.w = w;
    if (model.kind == ModelKind::KG_S2) {
      for (int l = -w; l <= w; ++l) c.modes.push_back({w, l});
    } else {
      for (int l = 1; l <= w; ++l) c.modes.push_back({w, l});
    }
    cl.levels.push_back(std::move(c));
  }
  return cl;
}

Clustering remove_admissible(const Clustering& cl, const AdmissibleSet& A) {
  Clustering out;
  out.W_max = cl.W_max;
  for (const auto& c : cl.levels) {
    Cluster nc;
    nc.w = c.w;
    for (const auto& md : c.modes)
      if (!A.contains(md)) nc.modes.push_back(md);
    if (!nc.modes.empty()) out.levels.push_back(std::move(nc));
  }
  return out;
}

double eigenvalue(const SpectralModel& model, ModeIndex a,
                  const Eigen::VectorXd& rho, bool tangential,
                  const AdmissibleSet* A) {
  const double j = a.j;
  if (!tangential) {
    if (model.kind == ModelKind::KG_S2) return std::sqrt(j * (j + 1) + model.m);
    return j;
  }
  if (A == nullptr) throw std::domain_error("eigenvalue: tangential needs A");
  const int i = A->index_of(a);
  if (i < 0) throw std::domain_error("eigenvalue: mode not in admissible set");
  if (i >= rho.size()) throw std::domain_error("eigenvalue: rho too short");
  if (model.kind == ModelKind::KG_S2)
    return std::sqrt(j * (j + 1) + model.m + model.delta * rho[i]);
  return j + rho[i];
}

Eigen::VectorXd omega0(const SpectralModel& model, const AdmissibleSet& A,
                       const Eigen::VectorXd& rho) {
  Eigen::VectorXd w(A.n());
  for (int i = 0; i < A.n(); ++i)
    w[i] = eigenvalue(model, A.modes[i], rho, true, &A);
  return w;
}

A1Report check_A1(const SpectralModel& model, int W_max) {
  A1Report rep;
  rep.min_growth = std::numeric_limits<double>::infinity();
  rep.min_gap = std::numeric_limits<double>::infinity();
  std::vector<double> lam(W_max + 1, 0.0);
  for (int w = 1; w <= W_max; ++w) {
    lam[w] = eigenvalue(model, {w, 0});
    rep.min_growth = std::min(rep.min_growth, lam[w] / std::pow(w, model.gamma));
  }
  for (int wa = 1; wa <= W_max; ++wa)
    for (int wb = wa + 1; wb <= W_max; ++wb)
      rep.min_gap = std::min(rep.min_gap,
                             std::abs(lam[wa] - lam[wb]) / double(wb - wa));
  return rep;
}

ExclusionReport sample_melnikov(const SpectralModel& model,
                                const AdmissibleSet& A, int W_max,
                                double kappa, int N, int M,
                                std::uint64_t seed) {
  ExclusionReport rep;
  rep.kappa = kappa;
  rep.N = N;
  rep.M = M;
  rep.seed = seed;
  const int n = A.n();
  // precompute normal eigenvalues per weight
  std::vector<double> lam(W_max + 1, 0.0);
  for (int w = 1; w <= W_max; ++w) lam[w] = eigenvalue(model, {w, 0});

  // enumerate nonzero k with |k|_1 <= N
  std::vector<Eigen::VectorXi> ks;
  Eigen::VectorXi k = Eigen::VectorXi::Constant(n, -N);
  while (true) {
    int l1 = k.cwiseAbs().sum();
    if (l1 > 0 && l1 <= N) ks.push_back(k);
    int i = 0;
    for (; i < n; ++i) {
      if (k[i] < N) {
        ++k[i];
        break;
      }
      k[i] = -N;
    }
    if (i == n) break;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(model.box_lo(), model.box_hi());
  long excluded = 0;
  for (int s = 0; s < M; ++s) {
    Eigen::VectorXd rho(n);
    for (int i = 0; i < n; ++i) rho[i] = uni(rng);
    const Eigen::VectorXd om = omega0(model, A, rho);
    bool bad = false;
    std::array<bool, 5> hit{};
    for (const auto& kk : ks) {
      const double kw = kk.cast<double>().dot(om);
      if (std::abs(kw) < kappa) hit[0] = true;
      for (int wa = 1; wa <= W_max; ++wa) {
        if (std::abs(kw + lam[wa]) < kappa * wa) hit[1] = true;
        for (int wb = wa; wb <= W_max; ++wb) {
          if (std::abs(kw + lam[wa] + lam[wb]) < kappa * (wa + wb))
            hit[2] = true;
          if (std::abs(kw + lam[wa] - lam[wb]) <
              kappa * (1.0 + std::abs(wa - wb))) {
            hit[3] = true;
            hit[4] = true;  // A3 coincides with family (iv) at h = h0
          }
        }
      }
    }
    for (int f = 0; f < 5; ++f)
      if (hit[f]) ++rep.family_hits[f];
    bad = hit[0] || hit[1] || hit[2] || hit[3] || hit[4];
    if (bad) ++excluded;
  }
  rep.fraction = double(excluded) / double(M);
  return rep;
}

static ModelKind kind_from_string(const std::string& s) {
  if (s == "KG_S2") return ModelKind::KG_S2;
  if (s == "QHO_R2") return ModelKind::QHO_R2;
  throw std::invalid_argument("unknown model kind: " + s);
}

ModelFile parse_model(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelFile mf;
  mf.model.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("m")) mf.model.m = j["m"].get<double>();
  if (j.contains("delta")) mf.model.delta = j["delta"].get<double>();
  mf.model.n = j.at("n").get<int>();
  mf.W_max = j.at("W_max").get<int>();
  for (const auto& p : j.at("admissible"))
    mf.A.modes.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
  if (j.contains("actions"))
    mf.A.actions = j["actions"].get<std::vector<double>>();
  else
    mf.A.actions.assign(mf.A.modes.size(),
                        0.5 * (mf.model.box_lo() + mf.model.box_hi()));
  if (static_cast<int>(mf.A.modes.size()) != mf.model.n)
    throw std::invalid_argument("model: admissible size != n");
  if (mf.A.actions.size() != mf.A.modes.size())
    throw std::invalid_argument("model: actions size mismatch");
  for (std::size_t i = 0; i < mf.A.modes.size(); ++i)
    for (std::size_t l = i + 1; l < mf.A.modes.size(); ++l)
      if (mf.A.modes[i].j == mf.A.modes[l].j)
        throw std::invalid_argument("model: admissible j-values must differ");
  return mf;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_model(text);
}

std::string model_to_json(const ModelFile& mf) {
  nlohmann::json j;
  j["kind"] = mf.model.kind == ModelKind::KG_S2 ? "KG_S2" : "QHO_R2";
  j["m"] = mf.model.m;
  j["delta"] = mf.model.delta;
  j["n"] = mf.model.n;
  j["W_max"] = mf.W_max;
  auto arr = nlohmann::json::array();
  for (const auto& a : mf.A.modes) arr.push_back({a.j, a.l});
  j["admissible"] = arr;
  j["actions"] = mf.A.actions;
  return j.dump(2);
}

}  // namespace kamnf

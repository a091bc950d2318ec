#include "kamnf/blockmat.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace kamnf {

namespace {
const Eigen::Matrix2cd& Umat() {
  static const Eigen::Matrix2cd U = [] {
    Eigen::Matrix2cd u;
    const double r = 1.0 / std::sqrt(2.0);
    u << Cx(r, 0), Cx(r, 0), Cx(0, -r), Cx(0, r);
    return u;
  }();
  return U;
}
}  // namespace

ModeVector::ModeVector(const Clustering& c) : cl(&c) {
  v.resize(c.n_clusters());
  for (int i = 0; i < c.n_clusters(); ++i)
    v[i] = Eigen::VectorXcd::Zero(2 * c.levels[i].dim());
}

double ModeVector::norm_s(double s) const {
  double acc = 0;
  for (int i = 0; i < (int)v.size(); ++i)
    acc += std::pow(cl->weight(i), 2 * s) * v[i].squaredNorm();
  return std::sqrt(acc);
}

double ModeVector::norm_dual_s(double s) const { return norm_s(-s); }

double ModeVector::norm_beta(double beta) const {
  double m = 0;
  for (int i = 0; i < (int)v.size(); ++i)
    m = std::max(m, std::pow(cl->weight(i), beta) * v[i].norm());
  return m;
}

double ModeVector::norm_beta_plus(double beta) const {
  double m = 0;
  for (int i = 0; i < (int)v.size(); ++i) {
    const double w = std::pow(cl->weight(i), beta + 1);
    for (int c = 0; c < v[i].size() / 2; ++c) {
      const double cell = std::sqrt(std::norm(v[i][2 * c]) +
                                    std::norm(v[i][2 * c + 1]));
      m = std::max(m, w * cell);
    }
  }
  return m;
}

double ModeVector::max_abs() const {
  double m = 0;
  for (const auto& x : v)
    if (x.size()) m = std::max(m, x.cwiseAbs().maxCoeff());
  return m;
}

ModeVector& ModeVector::operator+=(const ModeVector& o) {
  for (int i = 0; i < (int)v.size(); ++i) v[i] += o.v[i];
  return *this;
}

ModeVector& ModeVector::operator*=(Cx c) {
  for (auto& x : v) x *= c;
  return *this;
}

ModeVector ModeVector::conjugated() const {
  ModeVector o = *this;
  for (auto& x : o.v) x = x.conjugate();
  return o;
}

Cx ModeVector::dot(const ModeVector& o) const {
  Cx acc = 0;
  for (int i = 0; i < (int)v.size(); ++i)
    acc += v[i].cwiseProduct(o.v[i]).sum();  // bilinear, no conjugation
  return acc;
}

void ModeVector::apply_J_inplace() {
  for (auto& x : v)
    for (int c = 0; c < x.size() / 2; ++c) {
      const Cx p = x[2 * c], q = x[2 * c + 1];
      x[2 * c] = -q;
      x[2 * c + 1] = p;
    }
}

ModeVector ModeVector::applied_J() const {
  ModeVector o = *this;
  o.apply_J_inplace();
  return o;
}

bool ModeVector::is_zero(double tol) const { return max_abs() <= tol; }

const Eigen::MatrixXcd* BlockMatrix::find(int a, int b) const {
  auto it = blocks.find({a, b});
  return it == blocks.end() ? nullptr : &it->second;
}

Eigen::MatrixXcd& BlockMatrix::at(int a, int b) {
  auto it = blocks.find({a, b});
  if (it == blocks.end()) {
    Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(2 * cl->levels[a].dim(),
                                                2 * cl->levels[b].dim());
    it = blocks.emplace(std::make_pair(a, b), std::move(z)).first;
  }
  return it->second;
}

void BlockMatrix::set_block(int a, int b, const Eigen::MatrixXcd& M) {
  blocks[{a, b}] = M;
  if (sym && a != b) blocks[{b, a}] = M.transpose();
}

void BlockMatrix::add_block(int a, int b, const Eigen::MatrixXcd& M) {
  at(a, b) += M;
  if (sym && a != b) at(b, a) += M.transpose();
}

void BlockMatrix::symmetrize() {
  BlockMatrix t = transposed();
  BlockMatrix out(*cl, true);
  for (const auto& [k, M] : blocks) {
    Eigen::MatrixXcd h = 0.5 * M;
    out.at(k.first, k.second) += h;
  }
  for (const auto& [k, M] : t.blocks) {
    Eigen::MatrixXcd h = 0.5 * M;
    out.at(k.first, k.second) += h;
  }
  blocks = std::move(out.blocks);
  sym = true;
}

BlockMatrix& BlockMatrix::operator+=(const BlockMatrix& o) {
  for (const auto& [k, M] : o.blocks) at(k.first, k.second) += M;
  return *this;
}

BlockMatrix& BlockMatrix::operator*=(Cx c) {
  for (auto& [k, M] : blocks) M *= c;
  return *this;
}

BlockMatrix BlockMatrix::transposed() const {
  BlockMatrix o(*cl, sym);
  for (const auto& [k, M] : blocks)
    o.blocks[{k.second, k.first}] = M.transpose();
  return o;
}

BlockMatrix BlockMatrix::conjugated() const {
  BlockMatrix o(*cl, sym);
  for (const auto& [k, M] : blocks) o.blocks[k] = M.conjugate();
  return o;
}

double BlockMatrix::max_abs() const {
  double m = 0;
  for (const auto& [k, M] : blocks)
    if (M.size()) m = std::max(m, M.cwiseAbs().maxCoeff());
  return m;
}

bool BlockMatrix::is_zero(double tol) const { return max_abs() <= tol; }

void BlockMatrix::prune(double tol) {
  for (auto it = blocks.begin(); it != blocks.end();)
    if (it->second.size() == 0 || it->second.cwiseAbs().maxCoeff() <= tol)
      it = blocks.erase(it);
    else
      ++it;
}

double norm_beta(const BlockMatrix& A, double beta) {
  double m = 0;
  for (const auto& [k, M] : A.blocks)
    m = std::max(m, std::pow(A.cl->weight(k.first), beta) *
                        std::pow(A.cl->weight(k.second), beta) * M.norm());
  return m;
}

double norm_beta_plus(const BlockMatrix& A, double beta) {
  double m = 0;
  for (const auto& [k, M] : A.blocks) {
    const double gap =
        1.0 + std::abs(A.cl->levels[k.first].w - A.cl->levels[k.second].w);
    m = std::max(m, gap * std::pow(A.cl->weight(k.first), beta) *
                        std::pow(A.cl->weight(k.second), beta) * M.norm());
  }
  return m;
}

BlockMatrix mul(const BlockMatrix& A, const BlockMatrix& B) {
  if (A.cl != B.cl) throw std::invalid_argument("mul: clustering mismatch");
  BlockMatrix C(*A.cl, false);
  // map iteration is ordered by (a, k); for each output block contributions
  // therefore arrive in ascending intermediate level k
  for (const auto& [ak, M] : A.blocks) {
    for (int b = 0; b < A.cl->n_clusters(); ++b) {
      const Eigen::MatrixXcd* Bw = B.find(ak.second, b);
      if (Bw) C.at(ak.first, b).noalias() += M * (*Bw);
    }
  }
  return C;
}

ModeVector apply(const BlockMatrix& A, const ModeVector& z) {
  if (A.cl != z.cl) throw std::invalid_argument("apply: clustering mismatch");
  ModeVector out(*A.cl);
  for (const auto& [k, M] : A.blocks)
    out.v[k.first].noalias() += M * z.v[k.second];
  return out;
}

BlockMatrix J_left(const BlockMatrix& A) {
  BlockMatrix o(*A.cl, false);
  for (const auto& [k, M] : A.blocks) {
    Eigen::MatrixXcd N(M.rows(), M.cols());
    for (int c = 0; c < M.rows() / 2; ++c) {
      N.row(2 * c) = -M.row(2 * c + 1);
      N.row(2 * c + 1) = M.row(2 * c);
    }
    o.blocks[k] = std::move(N);
  }
  return o;
}

BlockMatrix J_right(const BlockMatrix& A) {
  BlockMatrix o(*A.cl, false);
  for (const auto& [k, M] : A.blocks) {
    Eigen::MatrixXcd N(M.rows(), M.cols());
    for (int c = 0; c < M.cols() / 2; ++c) {
      N.col(2 * c) = M.col(2 * c + 1);
      N.col(2 * c + 1) = -M.col(2 * c);
    }
    o.blocks[k] = std::move(N);
  }
  return o;
}

BlockMatrix outer(const ModeVector& X, const ModeVector& Y) {
  BlockMatrix A(*X.cl, false);
  for (int a = 0; a < X.cl->n_clusters(); ++a) {
    if (X.v[a].isZero(0)) continue;
    for (int b = 0; b < Y.cl->n_clusters(); ++b) {
      if (Y.v[b].isZero(0)) continue;
      A.blocks[{a, b}] = X.v[a] * Y.v[b].transpose();
    }
  }
  return A;
}

BlockMatrix nf_project(const BlockMatrix& A) {
  BlockMatrix P(*A.cl, true);
  for (const auto& [k, M] : A.blocks) {
    if (k.first != k.second) continue;
    const Eigen::MatrixXcd* Mt = A.find(k.second, k.first);
    Eigen::MatrixXcd Ssym = 0.5 * (M + Mt->transpose());
    Eigen::MatrixXcd N = Eigen::MatrixXcd::Zero(M.rows(), M.cols());
    for (int i = 0; i < M.rows() / 2; ++i)
      for (int j = 0; j < M.cols() / 2; ++j) {
        const Cx ci = 0.5 * (Ssym(2 * i, 2 * j) + Ssym(2 * i + 1, 2 * j + 1));
        const Cx cj = 0.5 * (Ssym(2 * i + 1, 2 * j) - Ssym(2 * i, 2 * j + 1));
        N(2 * i, 2 * j) = ci;
        N(2 * i + 1, 2 * j + 1) = ci;
        N(2 * i + 1, 2 * j) = cj;
        N(2 * i, 2 * j + 1) = -cj;
      }
    P.blocks[k] = std::move(N);
  }
  return P;
}

bool is_normal_form(const BlockMatrix& A, double tol) {
  const double scale = std::max(1.0, A.max_abs());
  for (const auto& [k, M] : A.blocks) {
    if (M.size() == 0) continue;
    if (k.first != k.second) {
      if (M.cwiseAbs().maxCoeff() > tol * scale) return false;
      continue;
    }
    if (M.imag().cwiseAbs().maxCoeff() > tol * scale) return false;
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  }
  BlockMatrix P = nf_project(A);
  for (const auto& [k, M] : A.blocks) {
    if (k.first != k.second) continue;
    const Eigen::MatrixXcd* Pb = P.find(k.first, k.second);
    Eigen::MatrixXcd diff = Pb ? (M - *Pb).eval() : M;
    if (diff.size() && diff.cwiseAbs().maxCoeff() > tol * scale) return false;
  }
  return true;
}

namespace {
Eigen::MatrixXcd conj_cells(const Eigen::MatrixXcd& M,
                            const Eigen::Matrix2cd& L,
                            const Eigen::Matrix2cd& R) {
  // cellwise L^T * cell * R
  Eigen::MatrixXcd N(M.rows(), M.cols());
  for (int i = 0; i < M.rows() / 2; ++i)
    for (int j = 0; j < M.cols() / 2; ++j)
      N.block<2, 2>(2 * i, 2 * j) =
          L.transpose() * M.block<2, 2>(2 * i, 2 * j) * R;
  return N;
}
}  // namespace

BlockMatrix to_complex(const BlockMatrix& A) {
  BlockMatrix C(*A.cl, false);
  const Eigen::Matrix2cd& U = Umat();
  for (const auto& [k, M] : A.blocks) C.blocks[k] = conj_cells(M, U, U);
  return C;
}

BlockMatrix from_complex(const BlockMatrix& C) {
  BlockMatrix A(*C.cl, false);
  const Eigen::Matrix2cd Ui = Umat().adjoint();
  for (const auto& [k, M] : C.blocks) A.blocks[k] = conj_cells(M, Ui, Ui);
  return A;
}

BlockMatrix q_of(const BlockMatrix& A) {
  BlockMatrix C = to_complex(A);
  BlockMatrix Q(*A.cl, false);
  for (const auto& [k, M] : C.blocks) {
    if (k.first != k.second) continue;
    const int d = (int)M.rows() / 2;
    Eigen::MatrixXcd q(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) q(i, j) = M(2 * i, 2 * j + 1);
    Q.blocks[k] = std::move(q);
  }
  return Q;
}

ModeVector to_complex(const ModeVector& z) {
  ModeVector o = z;
  const Eigen::Matrix2cd Ui = Umat().adjoint();
  for (auto& x : o.v)
    for (int c = 0; c < x.size() / 2; ++c)
      x.segment<2>(2 * c) = Ui * x.segment<2>(2 * c);
  return o;
}

ModeVector from_complex(const ModeVector& z) {
  ModeVector o = z;
  const Eigen::Matrix2cd& U = Umat();
  for (auto& x : o.v)
    for (int c = 0; c < x.size() / 2; ++c)
      x.segment<2>(2 * c) = U * x.segment<2>(2 * c);
  return o;
}

EigResult hermitian_eig(const Eigen::MatrixXcd& H) {
  const int n = (int)H.rows();
  const double scale = std::max(1e-300, H.norm());
  if ((H - H.adjoint()).norm() > 1e-10 * scale)
    throw std::invalid_argument("hermitian_eig: input not Hermitian");
  Eigen::MatrixXcd A = 0.5 * (H + H.adjoint());
  Eigen::MatrixXcd V = Eigen::MatrixXcd::Identity(n, n);
  const double thresh = 1e-14 * scale;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(A(p, q));
    if (std::sqrt(2 * off) <= thresh) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const Cx apq = A(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = A(p, p).real(), aqq = A(q, q).real();
        const double absa = std::abs(apq);
        const Cx phase = apq / absa;
        const double tau = (aqq - app) / (2 * absa);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1 + tau * tau));
        const double c = 1.0 / std::sqrt(1 + t * t);
        const Cx s = t * c * phase;
        // G = [[c, conj(s)], [-s, c]] applied on (p,q)
        for (int i = 0; i < n; ++i) {
          const Cx aip = A(i, p), aiq = A(i, q);
          A(i, p) = c * aip - std::conj(s) * aiq;
          A(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const Cx api = A(p, i), aqi = A(q, i);
          A(p, i) = c * api - s * aqi;
          A(q, i) = std::conj(s) * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const Cx vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - std::conj(s) * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
  }
  // sort ascending, deterministic phase
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = A(i, i).real();
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return ev[a] < ev[b]; });
  EigResult r;
  r.values.resize(n);
  r.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    r.values[i] = ev[idx[i]];
    Eigen::VectorXcd col = V.col(idx[i]);
    for (int c = 0; c < n; ++c)
      if (std::abs(col[c]) > 1e-12) {
        col *= std::conj(col[c] / std::abs(col[c]));
        break;
      }
    r.vectors.col(i) = col;
  }
  return r;
}

BracketConstants bracket_constants(const Clustering& cl, double beta,
                                   double s) {
  const int nc = cl.n_clusters();
  std::vector<double> w(nc), sq(nc);
  for (int i = 0; i < nc; ++i) {
    w[i] = cl.weight(i);
    sq[i] = std::sqrt((double)cl.levels[i].dim());
  }
  BracketConstants c{0, 0, 0, 0, 0, 0, 0, 1.0};
  for (int a = 0; a < nc; ++a) {
    double s1 = 0, s3 = 0, s6 = 0, s7 = 0;
    for (int k = 0; k < nc; ++k) {
      const double gap = 1.0 + std::abs(w[a] - w[k]);
      s1 += std::pow(w[k], -2 * beta) / gap;
      s3 += std::pow(w[k], -beta) / gap;
      s6 += std::pow(w[k], -s - beta) / gap;
      s7 += sq[k] * std::pow(w[k], -1 - 2 * beta) / gap;
    }
    c.c1 = std::max(c.c1, s1);
    c.c3 = std::max(c.c3, s3);
    c.c6 = std::max(c.c6, w[a] * s6);
    c.c7 = std::max(c.c7, w[a] * s7);
    for (int b = 0; b < nc; ++b) {
      double s2 = 0;
      for (int k = 0; k < nc; ++k)
        s2 += std::pow(w[k], -2 * beta) /
              ((1.0 + std::abs(w[a] - w[k])) * (1.0 + std::abs(w[b] - w[k])));
      c.c2 = std::max(c.c2, (1.0 + std::abs(w[a] - w[b])) * s2);
    }
  }
  for (int k = 0; k < nc; ++k) {
    c.c4 += sq[k] * std::pow(w[k], -1 - 2 * beta);
    c.c5 += std::pow(w[k], -s - beta);
  }
  return c;
}

void dump_blockmat(const std::string& path, const BlockMatrix& A,
                   double beta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_blockmat: cannot open " + path);
  const char magic[4] = {'K', 'N', 'F', 'B'};
  out.write(magic, 4);
  std::int32_t wmax = A.cl->W_max;
  std::uint32_t flags = A.sym ? 1u : 0u, nb = (std::uint32_t)A.blocks.size();
  out.write(reinterpret_cast<const char*>(&wmax), 4);
  out.write(reinterpret_cast<const char*>(&beta), 8);
  out.write(reinterpret_cast<const char*>(&flags), 4);
  out.write(reinterpret_cast<const char*>(&nb), 4);
  for (const auto& [k, M] : A.blocks) {
    std::int32_t hdr[4] = {A.cl->levels[k.first].w, A.cl->levels[k.second].w,
                           (std::int32_t)M.rows(), (std::int32_t)M.cols()};
    out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) {
        const double re = M(i, j).real(), im = M(i, j).imag();
        out.write(reinterpret_cast<const char*>(&re), 8);
        out.write(reinterpret_cast<const char*>(&im), 8);
      }
  }
}

BlockMatrix load_blockmat(const std::string& path, const Clustering& cl) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_blockmat: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "KNFB")
    throw std::runtime_error("load_blockmat: bad magic");
  std::int32_t wmax;
  double beta;
  std::uint32_t flags, nb;
  in.read(reinterpret_cast<char*>(&wmax), 4);
  in.read(reinterpret_cast<char*>(&beta), 8);
  in.read(reinterpret_cast<char*>(&flags), 4);
  in.read(reinterpret_cast<char*>(&nb), 4);
  BlockMatrix A(cl, flags & 1u);
  for (std::uint32_t t = 0; t < nb; ++t) {
    std::int32_t hdr[4];
    in.read(reinterpret_cast<char*>(hdr), sizeof hdr);
    const int a = cl.cluster_of_weight(hdr[0]);
    const int b = cl.cluster_of_weight(hdr[1]);
    if (a < 0 || b < 0) throw std::runtime_error("load_blockmat: bad level");
    Eigen::MatrixXcd M(hdr[2], hdr[3]);
    for (int i = 0; i < hdr[2]; ++i)
      for (int j = 0; j < hdr[3]; ++j) {
        double re, im;
        in.read(reinterpret_cast<char*>(&re), 8);
        in.read(reinterpret_cast<char*>(&im), 8);
        M(i, j) = Cx(re, im);
      }
    A.blocks[{a, b}] = std::move(M);
  }
  return A;
}

}  // namespace kamnf

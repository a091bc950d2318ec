#pragma once
// Mode enumeration, spectral models (wave equation on the sphere / 2-D
// harmonic oscillator), cluster structure and the non-resonance checkers.
#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace kamnf {

enum class ModelKind { KG_S2, QHO_R2 };

struct ModeIndex {
  int j = 0;  // energy level
  int l = 0;  // order within level
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
  friend auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
};

struct SpectralModel {
  ModelKind kind = ModelKind::KG_S2;
  double m = 1.0;       // mass (KG only)
  double delta = 0.5;   // parameter coupling (KG only)
  double gamma = 1.0;   // growth exponent of A1
  double c0 = 0.5;      // separation constant of A1
  double d = 1.0;       // cluster-dimension exponent
  int n = 2;            // parameter-box dimension

  double box_lo() const { return kind == ModelKind::KG_S2 ? 1.0 : 0.0; }
  double box_hi() const { return kind == ModelKind::KG_S2 ? 2.0 : 1.0; }
};

// Tangential mode set A with its fixed actions I_a.
struct AdmissibleSet {
  std::vector<ModeIndex> modes;
  std::vector<double> actions;
  int n() const { return static_cast<int>(modes.size()); }
  bool contains(ModeIndex a) const;
  int index_of(ModeIndex a) const;  // -1 if absent
};

struct Cluster {
  int w = 0;
  std::vector<ModeIndex> modes;
  int dim() const { return static_cast<int>(modes.size()); }
};

// The block partition of the retained mode set, levels ascending in w.
struct Clustering {
  int W_max = 0;
  std::vector<Cluster> levels;

  int n_clusters() const { return static_cast<int>(levels.size()); }
  int total_modes() const;
  // norm weight: max(w, 1)
  double weight(int ci) const { return std::max(levels[ci].w, 1); }
  int cluster_of_weight(int w) const;  // index into levels, -1 if absent
  // flat position of a mode inside the whole truncation (mode index order)
  int flat_index(ModeIndex a) const;
};

Clustering enumerate_modes(const SpectralModel& model, int W_max);
// L = E \ A : remove the tangential modes.
Clustering remove_admissible(const Clustering& cl, const AdmissibleSet& A);

// Normal eigenvalue lambda_a, or the tangential frequency when
// `tangential` is set (then a must belong to A and rho supplies the
// parameter coordinate attached to a's position in A).
double eigenvalue(const SpectralModel& model, ModeIndex a,
                  const Eigen::VectorXd& rho = {}, bool tangential = false,
                  const AdmissibleSet* A = nullptr);

Eigen::VectorXd omega0(const SpectralModel& model, const AdmissibleSet& A,
                       const Eigen::VectorXd& rho);

struct A1Report {
  double min_growth = 0;  // min lambda_a / w_a^gamma
  double min_gap = 0;     // min |lambda_a - lambda_b| / |w_a - w_b|
  bool pass(double c0) const { return min_growth >= c0 && min_gap >= c0; }
};
A1Report check_A1(const SpectralModel& model, int W_max);

struct ExclusionReport {
  double kappa = 0;
  int N = 0;
  int M = 0;
  std::uint64_t seed = 0;
  double fraction = 0;                     // excluded fraction of samples
  std::array<long, 5> family_hits{};      // A2(i..iv), A3
  // free regression fields, estimated elsewhere, never asserted
  double slope = 0, intercept = 0;
};

// Monte-Carlo over rho in D: a sample is excluded when some divisor of the
// four A2 families or of A3 falls below its kappa-scaled threshold for a
// nonzero |k|_1 <= N and modes within the truncation.
ExclusionReport sample_melnikov(const SpectralModel& model,
                                const AdmissibleSet& A, int W_max,
                                double kappa, int N, int M,
                                std::uint64_t seed);

// Model description file round-trip.
struct ModelFile {
  SpectralModel model;
  int W_max = 8;
  AdmissibleSet A;
};
ModelFile load_model(const std::string& path);
ModelFile parse_model(const std::string& json_text);
std::string model_to_json(const ModelFile& mf);

}  // namespace kamnf

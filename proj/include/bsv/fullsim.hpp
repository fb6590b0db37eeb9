#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bsv/photon.hpp"
#include "bsv/spin.hpp"

namespace bsv {

enum class CouplingModel { TavisCummings, Dicke };

CouplingModel parse_coupling_model(const std::string& name);

struct FullSimParams {
  CouplingModel model = CouplingModel::TavisCummings;
  int N = 2;
  double g = 0.02;
  double r = 1.0;
  double omega = 1.0;
  double delta = 1.0;  // two-level splitting

  SpinJ spin() const { return SpinJ::from_particles(N); }
  /// Resonant TC commutes with its free part, so the free phases can be split off exactly.
  bool resonant_tc() const { return model == CouplingModel::TavisCummings && omega == delta; }
  void validate() const;
};

/// Amplitude picture of a TotalKet. Interaction-picture amplitudes differ from the
/// lab ones by exp(i (omega n + delta m) t).
enum class Frame { Lab, Interaction };

/// Light-matter state; amps[i_m * (n_max + 1) + n] multiplies |J, m=-J+i_m>^z |n>.
struct TotalKet {
  SpinJ spin{0};
  int n_max = 0;
  double t = 0.0;
  Frame frame = Frame::Lab;
  CVector amps;

  static TotalKet product(const DickeKet& matter, const FockKet& light);
  Eigen::Index index(int i_m, int n) const { return static_cast<Eigen::Index>(i_m) * (n_max + 1) + n; }
  /// Rows are photon numbers, columns matter indices.
  Eigen::Map<const CMatrix> as_matrix() const { return {amps.data(), n_max + 1, spin.dim()}; }
};

/// Matrix-free action of the light-matter Hamiltonian on the (m, n) product space.
class HamiltonianAction {
 public:
  /// include_free = false keeps only the coupling part.
  HamiltonianAction(const FullSimParams& p, int n_max, bool include_free = true);

  void apply(const CVector& in, CVector& out) const;
  Eigen::Index size() const { return static_cast<Eigen::Index>(spin_.dim()) * (n_max_ + 1); }
  /// Number of apply() calls so far (not synchronized).
  std::size_t applications() const { return applications_; }
  int max_row_nonzeros() const;

 private:
  FullSimParams p_;
  SpinJ spin_;
  int n_max_;
  bool include_free_;
  RVector raise_, lower_, sqrt_n_;
  mutable std::size_t applications_ = 0;
};

/// psi <- sum_{k=0..4} (-i H dt)^k / k! psi, four Hamiltonian applications.
/// Throws InstabilityError when the squared norm moves by more than max_drift.
void taylor4_step(CVector& psi, const HamiltonianAction& h, double dt, double max_drift = 1e-9);

struct SimConfig {
  double dt = 1e-3;
  int n_max = 600;
  double t_end = 1.0;
  int report_stride = 100;
  /// Occupation of the top 5% Fock levels above which a truncation warning is issued.
  double top_occupation_warning = 1e-6;
};

struct EvolveReport {
  double max_norm_drift = 0.0;
  double max_top_occupation = 0.0;
  long steps = 0;
  std::vector<std::string> warnings;
};

/// Ground state times the squeezed vacuum, in the picture evolve() will use.
TotalKet initial_state(const FullSimParams& p, int n_max, double leakage_tol = kDefaultLeakageTolerance);

/// Steps from initial.t to config.t_end; observer is called at t = initial.t, every
/// report_stride steps, and at the end. Resonant TC runs in the interaction picture.
EvolveReport evolve(TotalKet& state, const FullSimParams& p, const SimConfig& config,
                    const std::function<void(const TotalKet&)>& observer);

double excitation_number(const TotalKet& state);
double total_norm_squared(const TotalKet& state);
double top_fock_occupation(const TotalKet& state, double fraction = 0.05);

struct QuadratureHerald {
  DickeKet ket;               // lab frame, z basis, unnormalized
  double prob_density = 0.0;  // density in the bare quadrature q
};

/// Ideal projection of the light onto <q; phi|.
QuadratureHerald herald_quadrature_exact(const TotalKet& state, const FullSimParams& p, const HeraldSpec& herald);

/// Lab-frame matter ket to the frame rotating at omega: exp(i omega t Jz).
DickeKet to_rotating_frame(const DickeKet& lab, double omega, double t);
MatterDensity to_rotating_frame(const MatterDensity& lab, double omega, double t);

/// Reduced matter density in the lab frame.
MatterDensity partial_trace_matter(const TotalKet& state, const FullSimParams& p);

/// Text header plus raw little-endian amplitudes and an FNV-1a checksum.
void save_checkpoint(const TotalKet& state, const std::string& path);
TotalKet load_checkpoint(const std::string& path);

struct AppendixScanConfig {
  std::vector<int> N_list{2, 4, 8};
  std::vector<double> r_grid;
  double g = 1.0;
  double g_dt = 2e-3;       // step in units of 1/g
  double span = 8.0;        // t_end = span / (g sqrt(N))
  int report_stride = 10;
  double leakage_tol = 1e-9;
  int n_max = 0;            // 0 picks the squeezed-vacuum truncation per r
};

struct ScanPoint {
  int N = 0;
  double r = 0.0;
  double max_qfi_density = 0.0;
  double t_peak = 0.0;
  int n_max = 0;
};

struct AppendixScanReport {
  std::vector<ScanPoint> points;
  std::vector<int> N_list;
  std::vector<double> r_c;          // parabolic-refined argmax over r
  std::vector<double> max_density;  // max over r and t
  std::vector<double> t_peak;       // time of that maximum
  double power_coefficient = 0.0, power_exponent = 0.0, power_rms_residual = 0.0;
  double log_slope = 0.0, log_intercept = 0.0, log_rms_residual = 0.0;
  /// t_peak g sqrt(N) per N.
  std::vector<double> scaled_peak_times;
};

AppendixScanReport appendix_a_scan(const AppendixScanConfig& config);

}  // namespace bsv

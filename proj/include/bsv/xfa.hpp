#pragma once

#include <span>
#include <string>
#include <vector>

#include "bsv/photon.hpp"
#include "bsv/spin.hpp"

namespace bsv {

/// Uniform field-strength grid with rectangular weights for the Gaussian
/// superposition over classical drives.
struct FieldGrid {
  RVector F_values;
  RVector weights;
  double F_c = 0.0;

  Eigen::Index size() const { return F_values.size(); }
  /// Largest relative defect of the grid's Gaussian moments {1, F, F^2}
  /// under exp(-2 F^2 / F_c^2) against the analytic values.
  double moment_defect() const;
  /// Throws ConfigError when moment_defect() exceeds tol.
  void validate_moments(double tol = 1e-8) const;
};

inline constexpr int kDefaultGridPoints = 801;
inline constexpr double kDefaultCutoffSigmas = 8.0;

/// n_points odd (>= 3) nodes on [-L, L], L = cutoff_sigmas * F_c / sqrt(2).
FieldGrid make_field_grid(double F_c, int n_points = kDefaultGridPoints,
                          double cutoff_sigmas = kDefaultCutoffSigmas);

/// Smallest odd node count that keeps the rectangular rule free of aliasing
/// for phases up to (2 t J + sqrt(2) |q_tilde|) F on a grid of the given cutoff.
int suggest_grid_points(double F_c, double t, SpinJ s, double q_tilde = 0.0,
                        double cutoff_sigmas = kDefaultCutoffSigmas);

/// Classically driven matter evolution U_F(t) in the frame where heralding
/// phases are defined. The field is the complex amplitude F with a -> i F / g.
class ClassicalPropagator {
 public:
  virtual ~ClassicalPropagator() = default;
  virtual std::string name() const = 0;
  virtual std::string frame() const { return "rotating"; }
  /// Basis of the amplitude vectors returned by evolve().
  virtual Axis working_axis() const { return Axis::Z; }
  /// U_F(t_k) psi0 for each requested time (ascending, >= 0), as amplitudes
  /// in working_axis().
  virtual std::vector<CVector> evolve(cdouble field, std::span<const double> times,
                                      const DickeKet& psi0) const = 0;

  DickeKet apply(cdouble field, double t, const DickeKet& psi0) const;
};

struct HeraldedState {
  DickeKet ket;               // unnormalized, z basis
  double prob_density = 0.0;  // density in the scaled outcome q_tilde
  HeraldSpec herald;
  double t = 0.0;
};

/// Heralded density for a finite-resolution bin plus the bin's success probability.
struct BinnedHerald {
  MatterDensity rho;
  double bin_probability = 0.0;
};

/// Node kets U_{F_i}(t_k) psi0 for a whole grid; columns follow the grid order.
struct Ensemble {
  SpinJ spin{0};
  Axis axis = Axis::Z;
  std::vector<double> times;
  std::vector<CMatrix> kets;  // kets[k](:, i) at times[k], node i

  static Ensemble build(const ClassicalPropagator& prop, const FieldGrid& grid, const DickeKet& psi0,
                        std::span<const double> times);
};

MatterDensity unconditional_density(const Ensemble& ens, const FieldGrid& grid, std::size_t time_index);
MatterDensity unconditional_density(const ClassicalPropagator& prop, const FieldGrid& grid,
                                    const DickeKet& psi0, double t);

HeraldedState heralded_vector(const Ensemble& ens, const FieldGrid& grid, const HeraldSpec& herald,
                              std::size_t time_index);
HeraldedState heralded_vector(const ClassicalPropagator& prop, const FieldGrid& grid, const DickeKet& psi0,
                              const HeraldSpec& herald, double t);

/// Rectangular-rule bin size used when the caller passes n_q <= 0.
int default_bin_nodes(double delta_q_tilde, double F_c);

BinnedHerald heralded_density_finite_resolution(const Ensemble& ens, const FieldGrid& grid,
                                                const HeraldSpec& herald, std::size_t time_index,
                                                int n_q = 0);
BinnedHerald heralded_density_finite_resolution(const ClassicalPropagator& prop, const FieldGrid& grid,
                                                const DickeKet& psi0, const HeraldSpec& herald, double t,
                                                int n_q = 0);

/// QFI of the heralded state times the success probability mass of its bin.
double probability_weighted_qfi(const MatterDensity& rho, double bin_prob);
double probability_weighted_qfi(const HeraldedState& state, double delta_q_tilde);

/// Even-cat driving: (|alpha0> + |-alpha0>)/sqrt(2 (1 + e^{-2 alpha0^2})) with real alpha0, heralded
/// at quadrature angle pi/2 in the rotating frame. q is the bare quadrature
/// outcome; prob_density is the density in q.
HeraldedState cat_heralded_vector(const ClassicalPropagator& prop, double alpha0, double g,
                                  const DickeKet& psi0, double q, double t);

}  // namespace bsv

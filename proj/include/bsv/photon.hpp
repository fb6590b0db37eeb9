#pragma once

#include "bsv/types.hpp"

namespace bsv {

inline constexpr double kDefaultLeakageTolerance = 1e-8;

/// Truncated single-mode photon state; amps[n] multiplies |n>.
struct FockKet {
  int n_max = 0;
  CVector amps;
  /// Probability outside the truncation, sum over n > n_max of |c_n|^2.
  double leakage = 0.0;

  double mean_photons() const;
};

/// Quadrature herald: angle phi, outcome center q and resolution delta_q in
/// bare quadrature units, and the coupling g that defines the scaled outcome.
class HeraldSpec {
 public:
  HeraldSpec(double phi, double q, double delta_q, double g);
  static HeraldSpec from_scaled(double phi, double q_tilde, double delta_q_tilde, double g) {
    return HeraldSpec(phi, q_tilde * g, delta_q_tilde * g, g);
  }

  double phi() const { return phi_; }
  double q() const { return q_; }
  double delta_q() const { return delta_q_; }
  double g() const { return g_; }
  double q_tilde() const { return q_ / g_; }
  double delta_q_tilde() const { return delta_q_ / g_; }
  bool ideal() const { return delta_q_ == 0.0; }

 private:
  double phi_, q_, delta_q_, g_;
};

/// e^{-|a|^2/2} a^n / sqrt(n!), log-space.
FockKet coherent_fock(cdouble alpha, int n_max, double leakage_tol = kDefaultLeakageTolerance);

/// Squeezed vacuum with real squeezing r >= 0; odd amplitudes are exactly zero.
FockKet squeezed_vacuum_fock(double r, int n_max, double leakage_tol = kDefaultLeakageTolerance);

/// Smallest even n_max whose squeezed-vacuum truncation leakage is <= tol.
int squeezed_vacuum_required_n_max(double r, double leakage_tol = kDefaultLeakageTolerance);

/// Gaussian weight of the imaginary-axis coherent state |ip> in the squeezed
/// vacuum: exp(-(coth r - 1) p^2 / 2) / sqrt(2 pi sinh r).
double janszky_weight(double p, double r);

/// <q; phi | alpha>.
cdouble quadrature_coherent_overlap(double q, double phi, cdouble alpha);

/// <q; phi | n> = e^{-i n phi} h_n(q), n = 0..n_max.
CVector quadrature_fock_overlap(double q, double phi, int n_max);

/// Real harmonic-oscillator eigenfunctions h_n(q), n = 0..n_max.
RVector hermite_functions(double q, int n_max);

}  // namespace bsv

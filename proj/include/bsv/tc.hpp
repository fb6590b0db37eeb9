#pragma once

#include "bsv/xfa.hpp"

namespace bsv {

/// Resonant Tavis-Cummings parameters; omega is the energy unit.
struct TcParams {
  int N = 2;
  double g = 0.005;
  double r = 3.0;
  double omega = 1.0;

  static TcParams from_field_scale(int N, double g, double F_c);
  double F_c() const { return g * std::exp(r); }
  SpinJ spin() const { return SpinJ::from_particles(N); }
  void validate() const;
};

/// U_F(t) = exp(-2 i t (Re F Jx - Im F Jy)) in the frame rotating at omega;
/// real F is diagonal in the x basis.
class TcPropagator final : public ClassicalPropagator {
 public:
  std::string name() const override { return "tavis-cummings"; }
  Axis working_axis() const override { return Axis::X; }
  std::vector<CVector> evolve(cdouble field, std::span<const double> times,
                              const DickeKet& psi0) const override;
};

/// Gaussian filter exp(-(F_c t)^2 (Jx - q_tilde/(sqrt(2) t))^2) applied to psi0, with the
/// prefactor that makes the squared norm the outcome density in q_tilde. At t = 0 the
/// filter reduces to the scalar exp(-(F_c q_tilde)^2 / 2).
HeraldedState tc_heralded_closed_form(const TcParams& p, double q_tilde, double t, const DickeKet& psi0);

/// Heralded QFI from the Gaussian-binomial sum for the ground-state start.
double tc_qfi_exact(const TcParams& p, double q_tilde, double t);

/// Large-N form at q_tilde = 0.
double tc_qfi_large_n(const TcParams& p, double t);

/// Outcome density at q_tilde = 0 for the ground-state start (density in q_tilde).
double tc_p0_density(const TcParams& p, double t);
/// Small- and large-tau asymptotes of tc_p0_density.
double tc_p0_density_short_time(const TcParams& p, double t);
double tc_p0_density_long_time(const TcParams& p);

/// Heralded ket restricted to Jx projections {-1, 0, 1} (x basis, unnormalized).
DickeKet tc_three_level_truncation(const TcParams& p, double q_tilde, double t);

/// Time after which a resolution-delta_q_tilde bin stops masking the filtering.
double tc_crossover_time(double delta_q_tilde);

}  // namespace bsv

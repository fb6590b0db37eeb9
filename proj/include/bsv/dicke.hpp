#pragma once

#include "bsv/xfa.hpp"

namespace bsv {

struct DickeModelParams {
  int N = 2;
  double g = 0.005;
  double r = 4.0;
  double omega = 1.0;
  double dt_classical = 0.01;

  double F_c() const { return g * std::exp(r); }
  SpinJ spin() const { return SpinJ::from_particles(N); }
  void validate() const;
};

/// Per-qubit evolution under omega Jz + 4 Re(F e^{-i omega t}) Jx with exact
/// 2x2 exponentials at the midpoint of each step, lifted to the symmetric
/// sector and returned in the frame rotating at omega (z basis). Requested
/// times are snapped to the nearest step.
class DickePropagator final : public ClassicalPropagator {
 public:
  DickePropagator(double omega, double dt);
  std::string name() const override { return "dicke"; }
  Axis working_axis() const override { return Axis::Z; }
  std::vector<CVector> evolve(cdouble field, std::span<const double> times,
                              const DickeKet& psi0) const override;

  /// Single-qubit propagator in the lab frame, basis (up, down).
  Eigen::Matrix2cd qubit_propagator(cdouble field, double t) const;

 private:
  double omega_, dt_;
};

/// Kick generator coefficients (cx, cy) with K = cx Jx + cy Jy.
std::array<double, 2> floquet_magnus_kick(cdouble field, double t, double omega = 1.0);

/// exp(-i K(t)) U_TC(t) psi0, returned in the z basis.
DickeKet floquet_magnus_propagator(cdouble field, double t, const DickeKet& psi0, double omega = 1.0);

/// True when |F| / omega is small enough for the kick expansion (below 0.3).
bool floquet_magnus_in_range(cdouble field, double omega = 1.0);

class FloquetMagnusPropagator final : public ClassicalPropagator {
 public:
  explicit FloquetMagnusPropagator(double omega = 1.0) : omega_(omega) {}
  std::string name() const override { return "floquet-magnus"; }
  std::vector<CVector> evolve(cdouble field, std::span<const double> times,
                              const DickeKet& psi0) const override;

 private:
  double omega_;
};

/// t = (2m + 1) pi / (2 omega).
double stroboscopic_time(int m, double omega = 1.0);

/// Heralded state at q_tilde = 0 and a stroboscopic time from the two-axis
/// Gaussian contraction sum over m_x, m_y of
/// exp(-(F_c t)^2 (m_x - m_y/(omega t))^2) <m_y|^y |m_x>^x.
HeraldedState dicke_stroboscopic_heralded(const DickeModelParams& p, double t, const DickeKet& psi0);

/// (|J,J>^z + (-1)^J |J,-J>^z) / sqrt(2).
DickeKet z_cat_reference(int N);

}  // namespace bsv

#pragma once

#include <array>

#include "bsv/spin.hpp"

namespace bsv {

struct QfiResult {
  double value = 0.0;
  /// Unit vector n maximizing the QFI of n.J; sign fixed so the largest component is positive.
  std::array<double, 3> direction{0.0, 0.0, 1.0};
};

/// Symmetric 3x3 covariance of (Jx, Jy, Jz); the ket is normalized internally.
Eigen::Matrix3d spin_covariance(const DickeKet& ket);

/// Pure state: 4 x largest covariance eigenvalue.
QfiResult qfi(const DickeKet& ket);

/// Mixed state: largest eigenvalue of the 3x3 QFI matrix from the spectral formula.
/// Eigenvalues below -1e-10 raise DomainError; smaller negatives are floored.
QfiResult qfi(const MatterDensity& rho);

/// Hermitian part, negative eigenvalues in (-floor, 0) clipped, unit trace.
MatterDensity regularize_density(const MatterDensity& rho, double negative_floor = 1e-10);

double fidelity(const DickeKet& a, const DickeKet& b);
double trace_distance(const MatterDensity& a, const MatterDensity& b);

/// Polar grid on the sphere with integration weights for dOmega = sin(theta) dtheta dphi.
struct SphereGrid {
  RVector thetas;
  RVector phis;
  RVector theta_weights;  // weights in cos(theta)
  RVector phi_weights;
  RMatrix values;         // values(i_theta, i_phi)

  /// Gauss-Legendre in cos(theta) times uniform phi on [0, 2 pi).
  static SphereGrid gauss_legendre(int n_theta, int n_phi);
  /// Uniform theta in [0, pi] including both poles, uniform phi; for plotting.
  static SphereGrid uniform(int n_theta, int n_phi);

  double integrate() const;
};

/// Per-projection weights of the spin Wigner kernel; they sum to 1.
RVector wigner_kernel_weights(SpinJ s);

/// Fills grid.values with W(theta, phi) = Tr[rho Delta(theta, phi)].
SphereGrid spin_wigner(const MatterDensity& rho, SphereGrid grid);

}  // namespace bsv

#pragma once

#include <array>
#include <string_view>

#include "bsv/types.hpp"

namespace bsv {

/// Total collective spin, stored as the integer 2J.
class SpinJ {
 public:
  constexpr explicit SpinJ(int twice_j) : twice_(twice_j) {
    if (twice_j < 0) throw DomainError("SpinJ: 2J must be non-negative");
  }
  /// J = N/2 for N two-level particles.
  static constexpr SpinJ from_particles(int n) { return SpinJ(n); }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr int dim() const { return twice_ + 1; }
  constexpr int particles() const { return twice_; }
  /// Index 0 is m = -J.
  constexpr double m_at(int index) const { return -value() + index; }
  constexpr int index_of_twice_m(int twice_m) const { return (twice_m + twice_) / 2; }

  friend constexpr bool operator==(SpinJ, SpinJ) = default;

 private:
  int twice_;
};

enum class Axis { X, Y, Z };

Axis parse_axis(std::string_view name);
const char* axis_name(Axis axis);

/// Pure symmetric matter state; amps[i] multiplies |J, m=-J+i>^axis.
struct DickeKet {
  SpinJ spin{0};
  Axis axis = Axis::Z;
  CVector amps;

  DickeKet() = default;
  DickeKet(SpinJ s, Axis a, CVector v);

  static DickeKet basis_state(SpinJ s, Axis a, int twice_m);
  /// |J,-J>^z, the all-spins-down ground state.
  static DickeKet ground(SpinJ s) { return basis_state(s, Axis::Z, -s.twice()); }

  double norm() const { return amps.norm(); }
  bool is_normalized(double tol = 1e-12) const;
  DickeKet normalized() const;
};

/// Reduced matter density matrix in the z Dicke basis.
struct MatterDensity {
  SpinJ spin{0};
  CMatrix rho;

  static MatterDensity from_ket(const DickeKet& ket);
  static MatterDensity maximally_mixed(SpinJ s);
  double trace() const { return rho.trace().real(); }
};

enum class CollectiveKind { Jx, Jy, Jz, Jplus, Jminus, AxisDot };

struct CollectiveOp {
  CollectiveKind kind;
  SpinJ spin;
  std::array<double, 3> direction{0.0, 0.0, 1.0};  // used by AxisDot only

  /// Matrix in the z Dicke basis.
  CMatrix matrix() const;
};

CMatrix spin_jx(SpinJ s);
CMatrix spin_jy(SpinJ s);
CMatrix spin_jz(SpinJ s);
CMatrix spin_jplus(SpinJ s);
CMatrix spin_jminus(SpinJ s);

/// R(theta, phi) = exp(i phi Jz) exp(i theta Jy) in the z basis.
CMatrix rotation_matrix(SpinJ s, double theta, double phi);

/// Columns are |J,m>^axis expressed in the z basis, m ascending.
/// |J,m>^x = exp(-i pi/2 Jy)|J,m>^z and |J,m>^y = exp(-i pi/2 Jz)|J,m>^x,
/// so that J^b |J,m>^b = m |J,m>^b with Condon-Shortley phases.
const CMatrix& axis_basis(SpinJ s, Axis axis);

DickeKet basis_change(const DickeKet& ket, Axis target);

/// exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz) applied to z-basis amplitudes.
CVector apply_euler_rotation(SpinJ s, double alpha, double beta, double gamma, const CVector& psi);

/// Action of u^{(x)N} on the symmetric subspace for a single-qubit unitary
/// u in the (up, down) basis.
CVector apply_qubit_unitary(SpinJ s, const Eigen::Matrix2cd& u, const CVector& psi);

/// Symmetric product state (a|up> + b|down>)^{(x)N} in the z Dicke basis:
/// c_m = sqrt(binom(2J, J+m)) a^{J+m} b^{J-m}.
CVector product_state(SpinJ s, cdouble up, cdouble down);

/// exp(-i angle (cos(azimuth) Jx + sin(azimuth) Jy)) applied to z-basis amplitudes.
CVector apply_equatorial_rotation(SpinJ s, double angle, double azimuth, const CVector& psi);

/// <j1 m1; j2 m2 | J M>, Condon-Shortley convention; arguments are 2j, 2m.
double clebsch_gordan(int twice_j1, int twice_m1, int twice_j2, int twice_m2, int twice_j,
                      int twice_m);
/// Same with half-integer-valued doubles; non half-integers raise DomainError.
double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m);

/// ln binom(n, k).
double log_binomial(int n, int k);

}  // namespace bsv

#include "bsv/dicke.hpp"

#include <cmath>

#include "bsv/tc.hpp"

namespace bsv {

namespace {

Eigen::Matrix2cd qubit_step(double bz, double bx, double dt) {
  // exp(-i dt (bz sz + bx sx)) for Pauli matrices
  const double b = std::hypot(bz, bx);
  Eigen::Matrix2cd u;
  if (b == 0.0) return Eigen::Matrix2cd::Identity();
  const double c = std::cos(b * dt), s = std::sin(b * dt) / b;
  u << cdouble(c, -s * bz), cdouble(0.0, -s * bx), cdouble(0.0, -s * bx), cdouble(c, s * bz);
  return u;
}

bool is_ground(const DickeKet& psi0) {
  if (psi0.axis != Axis::Z) return false;
  return psi0.amps(0) == cdouble(1.0) && psi0.amps.tail(psi0.amps.size() - 1).squaredNorm() == 0.0;
}

}  // namespace

void DickeModelParams::validate() const {
  if (N < 2 || N % 2) throw ConfigError("DickeModelParams: N must be even and >= 2");
  if (!(g > 0.0)) throw ConfigError("DickeModelParams: g must be positive");
  if (!(omega > 0.0)) throw ConfigError("DickeModelParams: omega must be positive");
  if (!(dt_classical > 0.0)) throw ConfigError("DickeModelParams: dt_classical must be positive");
}

DickePropagator::DickePropagator(double omega, double dt) : omega_(omega), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("DickePropagator: dt must be positive");
}

Eigen::Matrix2cd DickePropagator::qubit_propagator(cdouble field, double t) const {
  const long steps = std::lround(t / dt_);
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  for (long k = 0; k < steps; ++k) {
    const double tm = (k + 0.5) * dt_;
    const double drive = 2.0 * (field * std::polar(1.0, -omega_ * tm)).real();
    const Eigen::Matrix2cd step = qubit_step(0.5 * omega_, drive, dt_);
    u = step * u;
  }
  return u;
}

std::vector<CVector> DickePropagator::evolve(cdouble field, std::span<const double> times,
                                             const DickeKet& psi0) const {
  const SpinJ s = psi0.spin;
  const bool ground = is_ground(psi0);
  const CVector z0 = basis_change(psi0, Axis::Z).amps;
  std::vector<CVector> out;
  out.reserve(times.size());
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  long done = 0;
  for (double t : times) {
    const long target = std::lround(t / dt_);
    if (target < done) throw DomainError("DickePropagator: times must be ascending");
    for (; done < target; ++done) {
      const double tm = (done + 0.5) * dt_;
      const double drive = 2.0 * (field * std::polar(1.0, -omega_ * tm)).real();
      const Eigen::Matrix2cd step = qubit_step(0.5 * omega_, drive, dt_);
      const double defect = (step.adjoint() * step - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
      if (defect > 1e-12) throw InstabilityError("DickePropagator: 2x2 step lost unitarity");
      u = step * u;
    }
    CVector v = ground ? product_state(s, u(0, 1), u(1, 1)) : apply_qubit_unitary(s, u, z0);
    const double ts = target * dt_;
    for (int i = 0; i < s.dim(); ++i) v(i) *= std::polar(1.0, omega_ * ts * s.m_at(i));
    out.push_back(std::move(v));
  }
  return out;
}

std::array<double, 2> floquet_magnus_kick(cdouble field, double t, double omega) {
  const double mag = std::abs(field), eta = std::arg(field);
  const double a = mag / omega;
  return {a * (std::sin(2.0 * omega * t - eta) + std::sin(eta)),
          a * (std::cos(2.0 * omega * t - eta) - std::cos(eta))};
}

DickeKet floquet_magnus_propagator(cdouble field, double t, const DickeKet& psi0, double omega) {
  const TcPropagator tc;
  const DickeKet rwa = basis_change(tc.apply(field, t, psi0), Axis::Z);
  const auto k = floquet_magnus_kick(field, t, omega);
  const double angle = std::hypot(k[0], k[1]);
  if (angle == 0.0) return rwa;
  return DickeKet(psi0.spin, Axis::Z,
                  apply_equatorial_rotation(psi0.spin, angle, std::atan2(k[1], k[0]), rwa.amps));
}

bool floquet_magnus_in_range(cdouble field, double omega) { return std::abs(field) / omega <= 0.3; }

std::vector<CVector> FloquetMagnusPropagator::evolve(cdouble field, std::span<const double> times,
                                                     const DickeKet& psi0) const {
  std::vector<CVector> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(floquet_magnus_propagator(field, t, psi0, omega_).amps);
  return out;
}

double stroboscopic_time(int m, double omega) {
  if (m < 0) throw DomainError("stroboscopic_time: index must be non-negative");
  return (2.0 * m + 1.0) * M_PI / (2.0 * omega);
}

HeraldedState dicke_stroboscopic_heralded(const DickeModelParams& p, double t, const DickeKet& psi0) {
  p.validate();
  const double k = 2.0 * p.omega * t / M_PI;
  if (!(t > 0.0) || std::abs(k - std::round(k)) > 1e-9 || std::lround(k) % 2 == 0)
    throw DomainError("dicke_stroboscopic_heralded: t must be (2m+1) pi / (2 omega)");
  const SpinJ s = psi0.spin;
  const double F_c = p.F_c();
  const CMatrix& bx = axis_basis(s, Axis::X);
  const CMatrix& by = axis_basis(s, Axis::Y);
  const CMatrix overlap = by.adjoint() * bx;  // <m_y|^y |m_x>^x
  const CVector x = bx.adjoint() * basis_change(psi0, Axis::Z).amps;
  const double pre = std::sqrt(F_c / std::sqrt(M_PI));
  CVector y = CVector::Zero(s.dim());
  for (int iy = 0; iy < s.dim(); ++iy)
    for (int ix = 0; ix < s.dim(); ++ix) {
      const double d = F_c * (t * s.m_at(ix) - s.m_at(iy) / p.omega);
      y(iy) += pre * std::exp(-d * d) * overlap(iy, ix) * x(ix);
    }
  DickeKet ket = basis_change(DickeKet(s, Axis::Y, std::move(y)), Axis::Z);
  const double prob = ket.amps.squaredNorm();
  return {std::move(ket), prob, HeraldSpec::from_scaled(-p.omega * t, 0.0, 0.0, p.g), t};
}

DickeKet z_cat_reference(int N) {
  if (N < 2 || N % 2) throw DomainError("z_cat_reference: N must be even and >= 2");
  const SpinJ s = SpinJ::from_particles(N);
  CVector v = CVector::Zero(s.dim());
  const int j = N / 2;
  v(s.dim() - 1) = 1.0 / std::sqrt(2.0);
  v(0) = (j % 2 ? -1.0 : 1.0) / std::sqrt(2.0);
  return DickeKet(s, Axis::Z, std::move(v));
}

}  // namespace bsv

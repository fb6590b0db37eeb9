#include "bsv/tc.hpp"

#include <cmath>

namespace bsv {

namespace {

// ln |<J,m|^x |J,-J>^z|^2 = ln binom(2J, J+m) - 2J ln 2
double log_ground_weight(SpinJ s, int index) {
  return log_binomial(s.twice(), index) - s.twice() * std::log(2.0);
}

// Exponent of the Gaussian filter, -(F_c)^2 (t m - q_tilde / sqrt(2))^2.
double filter_exponent(double F_c, double q_tilde, double t, double m) {
  const double d = t * m - q_tilde / std::sqrt(2.0);
  return -F_c * F_c * d * d;
}

}  // namespace

TcParams TcParams::from_field_scale(int N, double g, double F_c) {
  if (!(g > 0.0) || !(F_c > 0.0)) throw ConfigError("TcParams: g and F_c must be positive");
  TcParams p;
  p.N = N;
  p.g = g;
  p.r = std::log(F_c / g);
  p.validate();
  return p;
}

void TcParams::validate() const {
  if (N < 2 || N % 2) throw ConfigError("TcParams: N must be even and >= 2");
  if (!(g > 0.0)) throw ConfigError("TcParams: g must be positive");
  if (!(omega > 0.0)) throw ConfigError("TcParams: omega must be positive");
}

std::vector<CVector> TcPropagator::evolve(cdouble field, std::span<const double> times,
                                          const DickeKet& psi0) const {
  const SpinJ s = psi0.spin;
  std::vector<CVector> out;
  out.reserve(times.size());
  if (field.imag() == 0.0) {
    const CVector x = basis_change(psi0, Axis::X).amps;
    for (double t : times) {
      CVector v(x.size());
      for (int i = 0; i < s.dim(); ++i) v(i) = x(i) * std::polar(1.0, -2.0 * field.real() * t * s.m_at(i));
      out.push_back(std::move(v));
    }
    return out;
  }
  const CVector z = basis_change(psi0, Axis::Z).amps;
  const double mag = std::abs(field);
  const double azimuth = std::atan2(-field.imag(), field.real());
  const CMatrix& xb = axis_basis(s, Axis::X);
  for (double t : times) out.push_back(xb.adjoint() * apply_equatorial_rotation(s, 2.0 * mag * t, azimuth, z));
  return out;
}

HeraldedState tc_heralded_closed_form(const TcParams& p, double q_tilde, double t, const DickeKet& psi0) {
  p.validate();
  if (t < 0.0) throw DomainError("tc_heralded_closed_form: t must be non-negative");
  const SpinJ s = psi0.spin;
  const double F_c = p.F_c();
  const double pre = std::sqrt(F_c / std::sqrt(M_PI));
  CVector x = basis_change(psi0, Axis::X).amps;
  for (int i = 0; i < s.dim(); ++i) x(i) *= pre * std::exp(filter_exponent(F_c, q_tilde, t, s.m_at(i)));
  DickeKet ket = basis_change(DickeKet(s, Axis::X, std::move(x)), Axis::Z);
  const double prob = ket.amps.squaredNorm();
  return {std::move(ket), prob, HeraldSpec::from_scaled(0.0, q_tilde, 0.0, p.g), t};
}

double tc_qfi_exact(const TcParams& p, double q_tilde, double t) {
  p.validate();
  const SpinJ s = p.spin();
  const double F_c = p.F_c(), tau = F_c * t, j = s.value();
  RVector lw(s.dim());
  for (int i = 0; i < s.dim(); ++i) lw(i) = log_ground_weight(s, i) + 2.0 * filter_exponent(F_c, q_tilde, t, s.m_at(i));
  const double shift = lw.maxCoeff();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < s.dim(); ++i) {
    const double w = std::exp(lw(i) - shift);
    const double m = s.m_at(i);
    num += (j * j - m * m) * w;
    den += w;
  }
  return p.N + 2.0 * -std::expm1(-2.0 * tau * tau) * num / den;
}

double tc_qfi_large_n(const TcParams& p, double t) {
  p.validate();
  const double tau = p.F_c() * t;
  const double n = p.N;
  return n + -std::expm1(-2.0 * tau * tau) * (0.5 * n * n - n / (2.0 * (1.0 + n * tau * tau)));
}

double tc_p0_density(const TcParams& p, double t) {
  p.validate();
  const SpinJ s = p.spin();
  const double F_c = p.F_c();
  RVector lw(s.dim());
  for (int i = 0; i < s.dim(); ++i) lw(i) = log_ground_weight(s, i) + 2.0 * filter_exponent(F_c, 0.0, t, s.m_at(i));
  const double shift = lw.maxCoeff();
  return F_c / std::sqrt(M_PI) * std::exp(shift) * (lw.array() - shift).exp().sum();
}

double tc_p0_density_short_time(const TcParams& p, double t) {
  const double tau = p.F_c() * t;
  return p.F_c() / std::sqrt(M_PI) / std::sqrt(1.0 + p.N * tau * tau);
}

double tc_p0_density_long_time(const TcParams& p) {
  return p.F_c() / std::sqrt(M_PI) / std::sqrt(M_PI * p.N / 2.0);
}

DickeKet tc_three_level_truncation(const TcParams& p, double q_tilde, double t) {
  p.validate();
  const SpinJ s = p.spin();
  const double F_c = p.F_c();
  const CVector x0 = basis_change(DickeKet::ground(s), Axis::X).amps;
  const double pre = std::sqrt(F_c / std::sqrt(M_PI));
  CVector x = CVector::Zero(s.dim());
  for (int tm = -2; tm <= 2; tm += 2) {
    const int i = s.index_of_twice_m(tm);
    x(i) = pre * x0(i) * std::exp(filter_exponent(F_c, q_tilde, t, 0.5 * tm));
  }
  return DickeKet(s, Axis::X, std::move(x));
}

double tc_crossover_time(double delta_q_tilde) {
  if (delta_q_tilde < 0.0) throw DomainError("tc_crossover_time: resolution must be non-negative");
  return delta_q_tilde / (2.0 * std::sqrt(2.0));
}

}  // namespace bsv

#include "bsv/photon.hpp"

#include <cmath>
#include <functional>

namespace bsv {

namespace {

// Sum of term(n) for n > n_max, stopping once terms are negligible past the peak.
double tail_sum(int n_max, double peak, int step, const std::function<double(int)>& term) {
  double sum = 0.0;
  for (int n = n_max + 1;; ++n) {
    if (step == 2 && n % 2) continue;
    const double t = term(n);
    sum += t;
    if (n > peak && (t == 0.0 || t < sum * 1e-17)) break;
    if (n > n_max + 10 * (peak + 200)) break;
  }
  return sum;
}

double log_sv_prob(int n, double r) {
  // |<2k|sv>|^2 in log form, n = 2k
  const int k = n / 2;
  return 2.0 * k * std::log(std::tanh(r)) + std::lgamma(2.0 * k + 1.0) - 2.0 * k * std::log(2.0) -
         2.0 * std::lgamma(k + 1.0) - std::log(std::cosh(r));
}

}  // namespace

double FockKet::mean_photons() const {
  double s = 0.0;
  for (int n = 0; n <= n_max; ++n) s += n * std::norm(amps(n));
  return s;
}

HeraldSpec::HeraldSpec(double phi, double q, double delta_q, double g)
    : phi_(phi), q_(q), delta_q_(delta_q), g_(g) {
  if (!(g > 0.0)) throw ConfigError("HeraldSpec: g must be positive");
  if (!(delta_q >= 0.0)) throw ConfigError("HeraldSpec: delta_q must be non-negative");
}

FockKet coherent_fock(cdouble alpha, int n_max, double leakage_tol) {
  if (n_max < 0) throw DomainError("coherent_fock: n_max must be non-negative");
  FockKet k;
  k.n_max = n_max;
  k.amps = CVector::Zero(n_max + 1);
  const double a = std::abs(alpha);
  if (a == 0.0) {
    k.amps(0) = 1.0;
    return k;
  }
  const double la = std::log(a), ph = std::arg(alpha), lam = a * a;
  auto log_mag = [&](int n) { return -0.5 * lam + n * la - 0.5 * std::lgamma(n + 1.0); };
  for (int n = 0; n <= n_max; ++n) k.amps(n) = std::polar(std::exp(log_mag(n)), n * ph);
  k.leakage = std::min(1.0, tail_sum(n_max, lam, 1, [&](int n) { return std::exp(2.0 * log_mag(n)); }));
  if (k.leakage > leakage_tol) {
    int need = n_max;
    double cum = 0.0;
    for (int n = 0;; ++n) {
      cum += std::exp(2.0 * log_mag(n));
      if (1.0 - cum <= leakage_tol) {
        need = n;
        break;
      }
    }
    throw TruncationError("coherent_fock: truncation leakage exceeds tolerance", need);
  }
  return k;
}

int squeezed_vacuum_required_n_max(double r, double leakage_tol) {
  if (r < 0.0) throw DomainError("squeezed_vacuum: r must be non-negative");
  if (r == 0.0) return 0;
  double cum = 0.0;
  for (int n = 0;; n += 2) {
    cum += std::exp(log_sv_prob(n, r));
    if (1.0 - cum <= leakage_tol) return n;
  }
}

FockKet squeezed_vacuum_fock(double r, int n_max, double leakage_tol) {
  if (r < 0.0) throw DomainError("squeezed_vacuum: r must be non-negative");
  if (n_max < 0) throw DomainError("squeezed_vacuum: n_max must be non-negative");
  FockKet k;
  k.n_max = n_max;
  k.amps = CVector::Zero(n_max + 1);
  if (r == 0.0) {
    k.amps(0) = 1.0;
    return k;
  }
  for (int n = 0; n <= n_max; n += 2) {
    const double mag = std::exp(0.5 * log_sv_prob(n, r));
    k.amps(n) = (n / 2) % 2 ? -mag : mag;
  }
  const double peak = std::sinh(r) * std::sinh(r);
  k.leakage = std::min(1.0, tail_sum(n_max, peak, 2, [&](int n) { return std::exp(log_sv_prob(n, r)); }));
  if (k.leakage > leakage_tol)
    throw TruncationError("squeezed_vacuum: truncation leakage exceeds tolerance",
                          squeezed_vacuum_required_n_max(r, leakage_tol));
  return k;
}

double janszky_weight(double p, double r) {
  if (!(r > 0.0)) throw DomainError("janszky_weight: r must be positive");
  const double coth_minus_one = 2.0 / std::expm1(2.0 * r);
  return std::exp(-0.5 * coth_minus_one * p * p) / std::sqrt(2.0 * M_PI * std::sinh(r));
}

cdouble quadrature_coherent_overlap(double q, double phi, cdouble alpha) {
  const cdouble beta = alpha * std::polar(1.0, -phi);
  const double q0 = beta.real(), p0 = beta.imag();
  const double d = q - std::sqrt(2.0) * q0;
  return std::pow(M_PI, -0.25) * std::exp(-0.5 * d * d) *
         std::polar(1.0, -q0 * p0 + std::sqrt(2.0) * p0 * q);
}

RVector hermite_functions(double q, int n_max) {
  if (n_max < 0) throw DomainError("hermite_functions: n_max must be non-negative");
  RVector h(n_max + 1);
  // Run the recurrence from h_0 = 1 with a running log scale so that the
  // Gaussian factor at large |q| does not underflow the whole sequence.
  constexpr double kBig = 1e200;
  const double log_big = std::log(kBig);
  double scale = -0.5 * q * q - 0.25 * std::log(M_PI);
  double prev = 0.0, cur = 1.0;
  RVector raw(n_max + 1), logs(n_max + 1);
  raw(0) = cur;
  logs(0) = scale;
  for (int n = 0; n < n_max; ++n) {
    const double next = std::sqrt(2.0 / (n + 1)) * q * cur - std::sqrt(n / (n + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kBig) {
      cur /= kBig;
      prev /= kBig;
      scale += log_big;
    }
    raw(n + 1) = cur;
    logs(n + 1) = scale;
  }
  for (int n = 0; n <= n_max; ++n)
    h(n) = raw(n) == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(raw(n))) + logs(n)), raw(n));
  return h;
}

CVector quadrature_fock_overlap(double q, double phi, int n_max) {
  const RVector h = hermite_functions(q, n_max);
  CVector out(n_max + 1);
  for (int n = 0; n <= n_max; ++n) out(n) = h(n) * std::polar(1.0, -n * phi);
  return out;
}

}  // namespace bsv

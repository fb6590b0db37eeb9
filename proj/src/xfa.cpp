#include "bsv/xfa.hpp"

#include <cmath>

#include "bsv/observables.hpp"
#include "bsv/parallel.hpp"

namespace bsv {

namespace {

CMatrix to_z(const CMatrix& rho_axis, SpinJ s, Axis axis) {
  if (axis == Axis::Z) return rho_axis;
  const CMatrix& b = axis_basis(s, axis);
  return b * rho_axis * b.adjoint();
}

// Per-node amplitude of the heralded operator, normalized so that the squared
// norm of the result is a probability density in the scaled outcome.
CVector herald_coefficients(const FieldGrid& grid, double q_tilde) {
  const double pre = 1.0 / (std::pow(M_PI, 0.75) * std::sqrt(grid.F_c));
  CVector c(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double f = grid.F_values(i);
    const double x = f / grid.F_c;
    c(i) = pre * grid.weights(i) * std::exp(-x * x) * std::polar(1.0, f * std::sqrt(2.0) * q_tilde);
  }
  return c;
}

}  // namespace

double FieldGrid::moment_defect() const {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const double f = F_values(i), x = f / F_c;
    const double w = weights(i) * std::exp(-2.0 * x * x);
    s0 += w;
    s1 += w * f;
    s2 += w * f * f;
  }
  const double i0 = std::sqrt(M_PI / 2.0) * F_c;
  const double i2 = i0 * F_c * F_c / 4.0;
  return std::max({std::abs(s0 / i0 - 1.0), std::abs(s1) / (i0 * F_c), std::abs(s2 / i2 - 1.0)});
}

void FieldGrid::validate_moments(double tol) const {
  const double d = moment_defect();
  if (!(d <= tol))
    throw ConfigError("field grid fails the Gaussian moment test (defect " + std::to_string(d) +
                      "); use more points or a wider cutoff");
}

FieldGrid make_field_grid(double F_c, int n_points, double cutoff_sigmas) {
  if (!(F_c > 0.0)) throw ConfigError("field grid: F_c must be positive");
  if (n_points < 3 || n_points % 2 == 0) throw ConfigError("field grid: n_points must be odd and >= 3");
  if (!(cutoff_sigmas > 0.0)) throw ConfigError("field grid: cutoff_sigmas must be positive");
  const double half = cutoff_sigmas * F_c / std::sqrt(2.0);
  const int mid = n_points / 2;
  const double h = half / mid;
  FieldGrid g;
  g.F_c = F_c;
  g.F_values.resize(n_points);
  for (int i = 0; i < n_points; ++i) g.F_values(i) = (i - mid) * h;
  g.weights = RVector::Constant(n_points, h);
  return g;
}

int suggest_grid_points(double F_c, double t, SpinJ s, double q_tilde, double cutoff_sigmas) {
  // Aliased copies sit 2 pi / h away in phase frequency; keep them 12 Gaussian
  // widths clear of the highest frequency present.
  const double span = 2.0 * F_c * t * s.value() + std::sqrt(2.0) * std::abs(q_tilde) * F_c + 12.0;
  const double h_over_fc = 2.0 * M_PI / span;
  int n = 2 * static_cast<int>(std::ceil(cutoff_sigmas / std::sqrt(2.0) / h_over_fc)) + 1;
  return std::max(n, 3);
}

DickeKet ClassicalPropagator::apply(cdouble field, double t, const DickeKet& psi0) const {
  const double ts[1] = {t};
  return DickeKet(psi0.spin, working_axis(), evolve(field, ts, psi0).front());
}

Ensemble Ensemble::build(const ClassicalPropagator& prop, const FieldGrid& grid, const DickeKet& psi0,
                         std::span<const double> times) {
  Ensemble e;
  e.spin = psi0.spin;
  e.axis = prop.working_axis();
  e.times.assign(times.begin(), times.end());
  e.kets.assign(times.size(), CMatrix(psi0.spin.dim(), grid.size()));
  parallel_for(static_cast<std::size_t>(grid.size()), [&](std::size_t i) {
    const auto traj = prop.evolve(grid.F_values(i), times, psi0);
    for (std::size_t k = 0; k < traj.size(); ++k) e.kets[k].col(i) = traj[k];
  });
  return e;
}

MatterDensity unconditional_density(const Ensemble& ens, const FieldGrid& grid, std::size_t k) {
  if (grid.size() > 1) grid.validate_moments();
  RVector u(grid.size());
  const double norm = 1.0 / (std::sqrt(M_PI / 2.0) * grid.F_c);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double x = grid.F_values(i) / grid.F_c;
    u(i) = grid.size() > 1 ? norm * grid.weights(i) * std::exp(-2.0 * x * x) : 1.0;
  }
  const CMatrix& kk = ens.kets.at(k);
  const CMatrix rho = kk * u.cast<cdouble>().asDiagonal() * kk.adjoint();
  return regularize_density({ens.spin, to_z(rho, ens.spin, ens.axis)});
}

MatterDensity unconditional_density(const ClassicalPropagator& prop, const FieldGrid& grid,
                                    const DickeKet& psi0, double t) {
  const double ts[1] = {t};
  return unconditional_density(Ensemble::build(prop, grid, psi0, ts), grid, 0);
}

HeraldedState heralded_vector(const Ensemble& ens, const FieldGrid& grid, const HeraldSpec& herald,
                              std::size_t k) {
  if (!herald.ideal())
    throw ConfigError("heralded_vector: non-ideal herald; use heralded_density_finite_resolution");
  const CVector psi = ens.kets.at(k) * herald_coefficients(grid, herald.q_tilde());
  DickeKet ket = basis_change(DickeKet(ens.spin, ens.axis, psi), Axis::Z);
  const double p = ket.amps.squaredNorm();
  return {std::move(ket), p, herald, ens.times.at(k)};
}

HeraldedState heralded_vector(const ClassicalPropagator& prop, const FieldGrid& grid, const DickeKet& psi0,
                              const HeraldSpec& herald, double t) {
  const double ts[1] = {t};
  return heralded_vector(Ensemble::build(prop, grid, psi0, ts), grid, herald, 0);
}

int default_bin_nodes(double delta_q_tilde, double F_c) {
  return std::max(33, static_cast<int>(std::ceil(delta_q_tilde * F_c * 8.0)));
}

BinnedHerald heralded_density_finite_resolution(const Ensemble& ens, const FieldGrid& grid,
                                                const HeraldSpec& herald, std::size_t k, int n_q) {
  const double dq = herald.delta_q_tilde();
  if (dq == 0.0) {
    const HeraldedState h = heralded_vector(ens, grid, herald, k);
    return {MatterDensity::from_ket(h.ket.normalized()), 0.0};
  }
  if (n_q <= 0) n_q = default_bin_nodes(dq, grid.F_c);
  CMatrix coeffs(grid.size(), n_q);
  for (int j = 0; j < n_q; ++j) {
    const double qj = herald.q_tilde() - 0.5 * dq + (j + 0.5) * dq / n_q;
    coeffs.col(j) = herald_coefficients(grid, qj);
  }
  const CMatrix psi = ens.kets.at(k) * coeffs;
  const double total = psi.squaredNorm();
  if (!(total > 0.0)) throw DomainError("heralded_density_finite_resolution: bin has zero probability");
  const CMatrix rho = psi * psi.adjoint() / total;
  return {regularize_density({ens.spin, to_z(rho, ens.spin, ens.axis)}), total * dq / n_q};
}

BinnedHerald heralded_density_finite_resolution(const ClassicalPropagator& prop, const FieldGrid& grid,
                                                const DickeKet& psi0, const HeraldSpec& herald, double t,
                                                int n_q) {
  const double ts[1] = {t};
  return heralded_density_finite_resolution(Ensemble::build(prop, grid, psi0, ts), grid, herald, 0, n_q);
}

double probability_weighted_qfi(const MatterDensity& rho, double bin_prob) {
  if (bin_prob < 0.0 || bin_prob > 1.0) throw DomainError("probability_weighted_qfi: bin_prob outside [0,1]");
  if (bin_prob == 0.0) return 0.0;
  return qfi(rho).value * bin_prob;
}

double probability_weighted_qfi(const HeraldedState& state, double delta_q_tilde) {
  if (state.prob_density == 0.0) return 0.0;
  return qfi(state.ket.normalized()).value * state.prob_density * delta_q_tilde;
}

HeraldedState cat_heralded_vector(const ClassicalPropagator& prop, double alpha0, double g,
                                  const DickeKet& psi0, double q, double t) {
  if (!(g > 0.0)) throw ConfigError("cat_heralded_vector: g must be positive");
  const double ts[1] = {t};
  // a -> i F / g, so the coherent amplitude alpha drives with F = -i g alpha.
  const CVector plus = prop.evolve(cdouble(0.0, -g * alpha0), ts, psi0).front();
  const CVector minus = prop.evolve(cdouble(0.0, g * alpha0), ts, psi0).front();
  const double phi = M_PI / 2.0;
  const CVector psi = (quadrature_coherent_overlap(q, phi, alpha0) * plus +
                       quadrature_coherent_overlap(q, phi, -alpha0) * minus) /
                      std::sqrt(2.0 * (1.0 + std::exp(-2.0 * alpha0 * alpha0)));
  DickeKet ket = basis_change(DickeKet(psi0.spin, prop.working_axis(), psi), Axis::Z);
  const double p = ket.amps.squaredNorm();
  return {std::move(ket), p, HeraldSpec(phi, q, 0.0, g), t};
}

}  // namespace bsv

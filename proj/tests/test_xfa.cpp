#include <doctest.h>

#include <cmath>

#include "bsv/observables.hpp"
#include "bsv/tc.hpp"
#include "bsv/xfa.hpp"
#include "oracles.hpp"

using namespace bsv;

namespace {
double defect(const DickeKet& a, const DickeKet& b) { return 1.0 - fidelity(a, b); }
}  // namespace

TEST_CASE("field grid layout and Gaussian moments") {
  const FieldGrid g = make_field_grid(0.1, 801, 8.0);
  CHECK(g.size() == 801);
  CHECK(g.F_values(400) == 0.0);
  CHECK(std::abs(g.F_values(0) + g.F_values(800)) < 1e-15);
  CHECK(std::abs(g.F_values(800) - 8.0 * 0.1 / std::sqrt(2.0)) < 1e-14);
  CHECK(g.moment_defect() < 1e-12);
  CHECK_NOTHROW(g.validate_moments());
  CHECK_THROWS_AS(make_field_grid(0.1, 800), ConfigError);
  CHECK_THROWS_AS(make_field_grid(-0.1, 801), ConfigError);
  CHECK_THROWS_AS(make_field_grid(0.1, 5, 1.0).validate_moments(), ConfigError);
  CHECK(suggest_grid_points(0.1, 40.0, SpinJ(32), 0.0) % 2 == 1);
  CHECK(suggest_grid_points(0.1, 400.0, SpinJ(32)) > suggest_grid_points(0.1, 40.0, SpinJ(32)));
}

TEST_CASE("TC propagator equals the dense exponential for complex fields") {
  const TcPropagator prop;
  const SpinJ s(6);
  const DickeKet psi0 = DickeKet::ground(s);
  for (cdouble f : {cdouble(0.3, 0.0), cdouble(0.1, -0.4), cdouble(0.0, 0.25)}) {
    const double t = 2.7;
    const CMatrix h = 2.0 * (f.real() * spin_jx(s) - f.imag() * spin_jy(s));
    const CVector ref = oracle::expm_hermitian(h, t) * psi0.amps;
    const DickeKet got = basis_change(prop.apply(f, t, psi0), Axis::Z);
    CHECK((got.amps - ref).norm() < 1e-12);
  }
}

TEST_CASE("engine matches the closed-form heralded state on a (q, t) grid") {
  for (int n : {2, 8, 32}) {
    TcParams p;
    p.N = n;
    p.g = 0.005;
    p.r = 3.0;
    const double F_c = p.F_c();
    const DickeKet psi0 = DickeKet::ground(p.spin());
    std::vector<double> times;
    for (int i = 0; i < 10; ++i) times.push_back(2.0 + 38.0 * i / 9.0);
    std::vector<double> qs;
    for (int i = 0; i < 10; ++i) qs.push_back(-p.spin().value() + 2.0 * p.spin().value() * i / 9.0);
    const TcPropagator prop;
    double worst = 0.0, worst_p = 0.0;
    for (double t : times) {
      const double ts[1] = {t};
      const int pts = std::max(801, suggest_grid_points(F_c, t, p.spin(), std::sqrt(2.0) * t * p.spin().value()));
      const FieldGrid grid = make_field_grid(F_c, pts);
      const Ensemble ens = Ensemble::build(prop, grid, psi0, ts);
      for (double mu : qs) {
        const double q = std::sqrt(2.0) * t * mu;
        const HeraldedState a = heralded_vector(ens, grid, HeraldSpec::from_scaled(0.0, q, 0.0, p.g), 0);
        const HeraldedState b = tc_heralded_closed_form(p, q, t, psi0);
        worst = std::max(worst, defect(a.ket, b.ket));
        worst_p = std::max(worst_p, std::abs(a.prob_density - b.prob_density) / b.prob_density);
      }
    }
    CHECK(worst < 1e-8);
    CHECK(worst_p < 1e-8);
  }
}

TEST_CASE("heralded dynamics depend on g only through F_c and q_tilde") {
  const TcPropagator prop;
  const SpinJ s(8);
  const DickeKet psi0 = DickeKet::ground(s);
  const double g = 0.01, r = 2.5, F_c = g * std::exp(r);
  const double g2 = g / 2, F_c2 = g2 * std::exp(r + std::log(2.0));
  const FieldGrid a = make_field_grid(F_c), b = make_field_grid(F_c2);
  for (double t : {3.0, 15.0}) {
    for (double q : {0.0, 0.4}) {
      // bare outcome and resolution scale with g
      const HeraldedState x = heralded_vector(prop, a, psi0, HeraldSpec(0.0, q, 0.0, g), t);
      const HeraldedState y = heralded_vector(prop, b, psi0, HeraldSpec(0.0, q / 2, 0.0, g2), t);
      CHECK(defect(x.ket, y.ket) < 1e-8);
      const BinnedHerald u = heralded_density_finite_resolution(prop, a, psi0, HeraldSpec(0.0, q, 0.3, g), t);
      const BinnedHerald v = heralded_density_finite_resolution(prop, b, psi0, HeraldSpec(0.0, q / 2, 0.15, g2), t);
      CHECK(trace_distance(u.rho, v.rho) < 1e-8);
      CHECK(std::abs(u.bin_probability - v.bin_probability) < 1e-10);
    }
  }
}

TEST_CASE("outcome density is non-negative and normalized") {
  const TcPropagator prop;
  TcParams p;
  p.N = 6;
  p.g = 0.05;
  p.r = std::log(0.5 / 0.05);  // F_c = 0.5
  const DickeKet psi0 = DickeKet::ground(p.spin());
  const FieldGrid grid = make_field_grid(p.F_c());
  for (double t : {0.0, 1.0, 4.0}) {
    const double ts[1] = {t};
    const Ensemble ens = Ensemble::build(prop, grid, psi0, ts);
    const double lo = -30, hi = 30;
    const int steps = 1200;
    const double h = (hi - lo) / steps;
    double total = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double pd = heralded_vector(ens, grid, HeraldSpec::from_scaled(0.0, lo + i * h, 0.0, p.g), 0).prob_density;
      CHECK(pd >= 0.0);
      total += ((i == 0 || i == steps) ? 0.5 : 1.0) * h * pd;
    }
    CHECK(std::abs(total - 1.0) < 1e-8);
  }
}

TEST_CASE("bins over a full partition reproduce the unconditional density") {
  const TcPropagator prop;
  const SpinJ s(6);
  const DickeKet psi0 = DickeKet::ground(s);
  const double F_c = 0.5, g = 0.05;
  const FieldGrid grid = make_field_grid(F_c);
  for (double t : {0.5, 3.0}) {
    const double ts[1] = {t};
    const Ensemble ens = Ensemble::build(prop, grid, psi0, ts);
    const MatterDensity unc = unconditional_density(ens, grid, 0);
    CMatrix acc = CMatrix::Zero(s.dim(), s.dim());
    double mass = 0.0;
    const double width = 2.0;
    for (double c = -40.0 + width / 2; c < 40.0; c += width) {
      const BinnedHerald b = heralded_density_finite_resolution(ens, grid, HeraldSpec::from_scaled(0.0, c, width, g), 0, 64);
      acc += b.bin_probability * b.rho.rho;
      mass += b.bin_probability;
    }
    CHECK(std::abs(mass - 1.0) < 1e-6);
    CHECK(trace_distance({s, acc}, unc) < 1e-6);
  }
}

TEST_CASE("unconditional mixtures never beat the standard quantum limit") {
  const TcPropagator prop;
  for (int n : {2, 8, 32}) {
    const SpinJ s = SpinJ::from_particles(n);
    const DickeKet psi0 = DickeKet::ground(s);
    for (double F_c : {0.1, 0.5}) {
      const FieldGrid grid = make_field_grid(F_c, suggest_grid_points(F_c, 40.0, s));
      const std::vector<double> ts{0.0, 1.0, 5.0, 10.0, 20.0, 40.0};
      const Ensemble ens = Ensemble::build(prop, grid, psi0, ts);
      for (std::size_t k = 0; k < ts.size(); ++k)
        CHECK(qfi(unconditional_density(ens, grid, k)).value / n <= 1.0 + 1e-6);
    }
  }
  // at t = 0 the mixture is the initial state
  const SpinJ s(8);
  const MatterDensity r0 = unconditional_density(prop, make_field_grid(0.1), DickeKet::ground(s), 0.0);
  CHECK(trace_distance(r0, MatterDensity::from_ket(DickeKet::ground(s))) < 1e-12);
}

TEST_CASE("finite-resolution limits") {
  const TcPropagator prop;
  const SpinJ s(8);
  const DickeKet psi0 = DickeKet::ground(s);
  const FieldGrid grid = make_field_grid(0.1);
  const double g = 0.005, t = 12.0;
  const HeraldedState ideal = heralded_vector(prop, grid, psi0, HeraldSpec::from_scaled(0.0, 3.0, 0.0, g), t);
  const BinnedHerald zero = heralded_density_finite_resolution(prop, grid, psi0, HeraldSpec::from_scaled(0.0, 3.0, 0.0, g), t);
  CHECK(trace_distance(zero.rho, MatterDensity::from_ket(ideal.ket.normalized())) < 1e-12);
  CHECK(zero.bin_probability == 0.0);
  const double dq = 1e-3;
  const BinnedHerald thin = heralded_density_finite_resolution(prop, grid, psi0, HeraldSpec::from_scaled(0.0, 3.0, dq, g), t);
  CHECK(trace_distance(thin.rho, MatterDensity::from_ket(ideal.ket.normalized())) < 1e-6);
  CHECK(std::abs(thin.bin_probability / dq - ideal.prob_density) / ideal.prob_density < 1e-6);
  CHECK_THROWS_AS(heralded_vector(prop, grid, psi0, HeraldSpec::from_scaled(0.0, 3.0, 1.0, g), t), ConfigError);
  CHECK(default_bin_nodes(40.0, 0.1) == 33);
  CHECK(default_bin_nodes(120.0, 0.1) == 96);
  CHECK(probability_weighted_qfi(zero.rho, 0.0) == 0.0);
  CHECK_THROWS_AS(probability_weighted_qfi(zero.rho, 1.5), DomainError);
}

TEST_CASE("cat driving against an explicit superposition") {
  const TcPropagator prop;
  const SpinJ s(4);
  const DickeKet psi0 = DickeKet::ground(s);
  const double alpha0 = 1.3, g = 0.05, t = 4.0;
  for (double q : {0.0, 0.7, -1.1}) {
    const HeraldedState h = cat_heralded_vector(prop, alpha0, g, psi0, q, t);
    // |+alpha0> drives with F = -i g alpha0, i.e. exp(-2 i t g alpha0 Jy) in this frame.
    const CMatrix up = oracle::expm_hermitian(spin_jy(s), 2 * t * g * alpha0);
    const CMatrix um = oracle::expm_hermitian(spin_jy(s), -2 * t * g * alpha0);
    const double norm = std::sqrt(2 * (1 + std::exp(-2 * alpha0 * alpha0)));
    const CVector ref = (quadrature_coherent_overlap(q, M_PI / 2, alpha0) * (up * psi0.amps) +
                         quadrature_coherent_overlap(q, M_PI / 2, -alpha0) * (um * psi0.amps)) /
                        norm;
    CHECK((h.ket.amps - ref).norm() < 1e-12);
  }
  // total probability over q: (1 + e^{-2 a^2} Re<psi-|psi+>) / (1 + e^{-2 a^2})
  const CVector pp = oracle::expm_hermitian(spin_jy(s), 2 * t * g * alpha0) * psi0.amps;
  const CVector pm = oracle::expm_hermitian(spin_jy(s), -2 * t * g * alpha0) * psi0.amps;
  const double e = std::exp(-2 * alpha0 * alpha0);
  const double expect = (1 + e * pm.dot(pp).real()) / (1 + e);
  double total = 0.0;
  const double h = 0.01;
  for (int i = -1200; i <= 1200; ++i) total += h * cat_heralded_vector(prop, alpha0, g, psi0, i * h, t).prob_density;
  CHECK(std::abs(total - expect) < 1e-8);
}

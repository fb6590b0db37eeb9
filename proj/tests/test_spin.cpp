#include <doctest.h>

#include <cmath>
#include <random>

#include "bsv/spin.hpp"
#include "oracles.hpp"

using namespace bsv;

namespace {
double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }
const cdouble I(0.0, 1.0);
}  // namespace

TEST_CASE("commutators and Casimir hold for all J up to 32") {
  for (int tj = 0; tj <= 64; ++tj) {
    const SpinJ s(tj);
    const CMatrix jx = spin_jx(s), jy = spin_jy(s), jz = spin_jz(s);
    CHECK(max_abs(jx * jy - jy * jx - I * jz) < 1e-10);
    CHECK(max_abs(jy * jz - jz * jy - I * jx) < 1e-10);
    CHECK(max_abs(jz * jx - jx * jz - I * jy) < 1e-10);
    const double j = s.value();
    CHECK(max_abs(jx * jx + jy * jy + jz * jz - j * (j + 1) * CMatrix::Identity(s.dim(), s.dim())) < 1e-10);
    CHECK(max_abs(spin_jplus(s) - (jx + I * jy)) < 1e-12);
    CHECK(max_abs(spin_jminus(s) - (jx - I * jy)) < 1e-12);
  }
}

TEST_CASE("collective operators match the symmetric sector of N qubits") {
  for (int n = 1; n <= 6; ++n) {
    const SpinJ s = SpinJ::from_particles(n);
    CHECK(max_abs(spin_jx(s) - oracle::restrict_symmetric(oracle::qubit_collective(n, 0), n)) < 1e-12);
    CHECK(max_abs(spin_jy(s) - oracle::restrict_symmetric(oracle::qubit_collective(n, 1), n)) < 1e-12);
    CHECK(max_abs(spin_jz(s) - oracle::restrict_symmetric(oracle::qubit_collective(n, 2), n)) < 1e-12);
  }
}

TEST_CASE("CollectiveOp matrices") {
  const SpinJ s(5);
  CHECK(max_abs(CollectiveOp{CollectiveKind::Jx, s}.matrix() - spin_jx(s)) == 0.0);
  CHECK(max_abs(CollectiveOp{CollectiveKind::Jminus, s}.matrix() - spin_jminus(s)) == 0.0);
  const double c = 1.0 / std::sqrt(3.0);
  const CMatrix n = CollectiveOp{CollectiveKind::AxisDot, s, {c, c, c}}.matrix();
  CHECK(max_abs(n - c * (spin_jx(s) + spin_jy(s) + spin_jz(s))) < 1e-12);
}

TEST_CASE("axis bases are eigenbases with the stated labels and are unitary") {
  for (int tj = 0; tj <= 40; ++tj) {
    const SpinJ s(tj);
    const CMatrix& bx = axis_basis(s, Axis::X);
    const CMatrix& by = axis_basis(s, Axis::Y);
    const CMatrix& bz = axis_basis(s, Axis::Z);
    CHECK(max_abs(bz - CMatrix::Identity(s.dim(), s.dim())) == 0.0);
    CHECK(max_abs(bx.adjoint() * bx - CMatrix::Identity(s.dim(), s.dim())) < 1e-10);
    CHECK(max_abs(by.adjoint() * by - CMatrix::Identity(s.dim(), s.dim())) < 1e-10);
    for (int i = 0; i < s.dim(); ++i) {
      const double m = s.m_at(i);
      CHECK((spin_jx(s) * bx.col(i) - m * bx.col(i)).norm() < 1e-9);
      CHECK((spin_jy(s) * by.col(i) - m * by.col(i)).norm() < 1e-9);
    }
    // sum_m |<m|^x |m'>^z|^2 = 1 for every m'
    for (int i = 0; i < s.dim(); ++i) CHECK(std::abs(bx.row(i).squaredNorm() - 1.0) < 1e-10);
  }
}

TEST_CASE("x basis is exp(-i pi/2 Jy) of the z basis") {
  for (int tj : {1, 2, 7, 16}) {
    const SpinJ s(tj);
    const CMatrix u = oracle::expm_hermitian(spin_jy(s), M_PI / 2);
    CHECK(max_abs(axis_basis(s, Axis::X) - u) < 1e-10);
    const CMatrix uy = oracle::expm_hermitian(spin_jz(s), M_PI / 2) * u;
    CHECK(max_abs(axis_basis(s, Axis::Y) - uy) < 1e-10);
  }
}

TEST_CASE("basis_change round trips") {
  std::mt19937_64 rng(7);
  const SpinJ s(9);
  const DickeKet k(s, Axis::Z, oracle::random_ket(s.dim(), rng));
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const DickeKet there = basis_change(k, a);
    CHECK(there.axis == a);
    const DickeKet back = basis_change(there, Axis::Z);
    CHECK((back.amps - k.amps).norm() < 1e-12);
  }
  const DickeKet kx = basis_change(k, Axis::X);
  CHECK((basis_change(kx, Axis::Y).amps - basis_change(k, Axis::Y).amps).norm() < 1e-12);
}

TEST_CASE("rotation_matrix equals the dense exponential product") {
  for (int tj : {1, 4, 9}) {
    const SpinJ s(tj);
    for (double th : {0.0, 0.3, 1.7, 3.1}) {
      for (double ph : {0.0, 0.9, -2.2}) {
        const CMatrix ref = oracle::expm_hermitian(spin_jz(s), -ph) * oracle::expm_hermitian(spin_jy(s), -th);
        CHECK(max_abs(rotation_matrix(s, th, ph) - ref) < 1e-10);
      }
    }
  }
}

TEST_CASE("Euler, equatorial and qubit-product rotations") {
  std::mt19937_64 rng(11);
  for (int tj : {2, 5, 12}) {
    const SpinJ s(tj);
    const CVector psi = oracle::random_ket(s.dim(), rng);
    const double a = 0.4, b = 1.1, c = -2.3;
    const CMatrix u = oracle::expm_hermitian(spin_jz(s), a) * oracle::expm_hermitian(spin_jy(s), b) *
                      oracle::expm_hermitian(spin_jz(s), c);
    CHECK((apply_euler_rotation(s, a, b, c, psi) - u * psi).norm() < 1e-10);

    const double ang = 0.77, az = 2.1;
    const CMatrix g = std::cos(az) * spin_jx(s) + std::sin(az) * spin_jy(s);
    CHECK((apply_equatorial_rotation(s, ang, az, psi) - oracle::expm_hermitian(g, ang) * psi).norm() < 1e-10);
  }
  for (int n = 1; n <= 5; ++n) {
    const SpinJ s = SpinJ::from_particles(n);
    const CMatrix e = oracle::dicke_embedding(n);
    const CMatrix r = oracle::expm_hermitian(CMatrix(oracle::qubit_collective(1, 0) * 0.3 +
                                                     oracle::qubit_collective(1, 1) * -1.2 +
                                                     oracle::qubit_collective(1, 2) * 0.5),
                                             1.0);
    Eigen::Matrix2cd u = r * std::polar(1.0, 0.37);
    const CVector psi = oracle::random_ket(s.dim(), rng);
    const CVector ref = e.adjoint() * oracle::tensor_power(u, n) * e * psi;
    CHECK((apply_qubit_unitary(s, u, psi) - ref).norm() < 1e-10);

    const cdouble up(0.6, 0.1), down(-0.2, 0.75);
    CVector single(2);
    single << up, down;
    CVector full = CVector::Ones(1);
    for (int q = 0; q < n; ++q) full = oracle::kron(full, single);
    CHECK((product_state(s, up, down) - e.adjoint() * full).norm() < 1e-12);
  }
}

TEST_CASE("large-N product states stay finite") {
  const SpinJ s(400);
  const CVector v = product_state(s, cdouble(std::sqrt(0.5), 0), cdouble(0, std::sqrt(0.5)));
  CHECK(v.allFinite());
  CHECK(std::abs(v.norm() - 1.0) < 1e-10);
}

TEST_CASE("DickeKet helpers") {
  const SpinJ s(4);
  const DickeKet g = DickeKet::ground(s);
  CHECK(g.amps(0) == cdouble(1.0));
  CHECK(g.is_normalized());
  const DickeKet b = DickeKet::basis_state(s, Axis::X, 2);
  CHECK(b.amps(s.index_of_twice_m(2)) == cdouble(1.0));
  CHECK_THROWS_AS(DickeKet::basis_state(s, Axis::Z, 1), DomainError);
  CHECK_THROWS_AS(DickeKet::basis_state(s, Axis::Z, 6), DomainError);
  DickeKet z(s, Axis::Z, CVector::Zero(5));
  CHECK_THROWS_AS(z.normalized(), DomainError);
  CHECK_THROWS_AS(SpinJ(-1), DomainError);
  CHECK(parse_axis("x") == Axis::X);
  CHECK(parse_axis("Z") == Axis::Z);
  CHECK_THROWS(parse_axis("w"));
  const MatterDensity mm = MatterDensity::maximally_mixed(s);
  CHECK(std::abs(mm.trace() - 1.0) < 1e-14);
}

TEST_CASE("log_binomial matches exact integer binomials") {
  for (int n = 0; n <= 62; ++n)
    for (int k = 0; k <= n; ++k)
      CHECK(std::abs(log_binomial(n, k) - std::log(static_cast<double>(oracle::binomial(n, k)))) < 1e-10);
}

TEST_CASE("Clebsch-Gordan coefficients agree with the lowering construction") {
  for (int tj1 = 0; tj1 <= 4; ++tj1)
    for (int tj2 = 0; tj2 <= 4; ++tj2)
      for (int tj = std::abs(tj1 - tj2); tj <= tj1 + tj2; tj += 2)
        for (int tm = -tj; tm <= tj; tm += 2)
          for (int tm1 = -tj1; tm1 <= tj1; tm1 += 2) {
            const int tm2 = tm - tm1;
            if (std::abs(tm2) > tj2) continue;
            CHECK(std::abs(clebsch_gordan(tj1, tm1, tj2, tm2, tj, tm) -
                           oracle::cg_by_lowering(tj1, tm1, tj2, tm2, tj, tm)) < 1e-10);
          }
  CHECK(std::abs(clebsch_gordan(0.5, 0.5, 0.5, -0.5, 1.0, 0.0) - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0.0, 0.0) - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0.0, 0.0) + std::sqrt(0.5)) < 1e-15);
}

TEST_CASE("Clebsch-Gordan orthogonality for j1 = j2 = J up to 8") {
  for (int tjj = 0; tjj <= 16; ++tjj) {
    for (int ta = 0; ta <= 2 * tjj; ta += 2)
      for (int tb = ta; tb <= std::min(ta + 4, 2 * tjj); tb += 2)
        for (int tm = -ta; tm <= ta; tm += 2) {
          double sum = 0.0;
          for (int tm1 = -tjj; tm1 <= tjj; tm1 += 2) {
            const int tm2 = tm - tm1;
            if (std::abs(tm2) > tjj || std::abs(tm) > tb) continue;
            sum += clebsch_gordan(tjj, tm1, tjj, tm2, ta, tm) * clebsch_gordan(tjj, tm1, tjj, tm2, tb, tm);
          }
          CHECK(std::abs(sum - (ta == tb ? 1.0 : 0.0)) < 1e-10);
        }
  }
}

TEST_CASE("Clebsch-Gordan domain errors and vanishing cases") {
  CHECK_THROWS_AS(clebsch_gordan(2, 1, 2, 0, 2, 1), DomainError);    // m parity
  CHECK_THROWS_AS(clebsch_gordan(2, 4, 2, 0, 2, 4), DomainError);    // |m| > j
  CHECK_THROWS_AS(clebsch_gordan(0.3, 0.3, 1.0, 0.0, 1.0, 0.3), DomainError);
  CHECK(clebsch_gordan(2, 2, 2, 0, 2, 0) == 0.0);                    // M != m1 + m2
  CHECK(clebsch_gordan(2, 0, 2, 0, 8, 0) == 0.0);                    // triangle
}

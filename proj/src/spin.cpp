#include "bsv/spin.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <Eigen/Eigenvalues>

namespace bsv {

namespace {

struct SpinTables {
  CMatrix jx, jy, jz, jplus;
  RVector jy_eig;
  CMatrix jy_vec;
  CMatrix x_basis, y_basis, z_basis;
};

CMatrix build_jplus(SpinJ s) {
  const int d = s.dim();
  const double j = s.value();
  CMatrix jp = CMatrix::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) {
    const double m = s.m_at(i);
    jp(i + 1, i) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  return jp;
}

std::unique_ptr<SpinTables> build_tables(SpinJ s) {
  auto t = std::make_unique<SpinTables>();
  const int d = s.dim();
  t->jplus = build_jplus(s);
  const CMatrix jm = t->jplus.adjoint();
  t->jx = 0.5 * (t->jplus + jm);
  t->jy = (t->jplus - jm) / cdouble(0.0, 2.0);
  t->jz = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) t->jz(i, i) = s.m_at(i);

  Eigen::SelfAdjointEigenSolver<CMatrix> es(t->jy);
  t->jy_eig = es.eigenvalues();
  t->jy_vec = es.eigenvectors();

  CVector ph(d);
  for (int i = 0; i < d; ++i) ph(i) = std::exp(cdouble(0.0, -0.5 * M_PI * t->jy_eig(i)));
  // exp(-i pi/2 Jy) is real; drop rounding residue in the imaginary part.
  CMatrix rx = t->jy_vec * ph.asDiagonal() * t->jy_vec.adjoint();
  t->x_basis = rx.real().cast<cdouble>();
  t->y_basis = t->x_basis;
  for (int i = 0; i < d; ++i)
    t->y_basis.row(i) *= std::exp(cdouble(0.0, -0.5 * M_PI * s.m_at(i)));
  t->z_basis = CMatrix::Identity(d, d);
  return t;
}

const SpinTables& tables(SpinJ s) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<SpinTables>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(s.twice());
  if (it == cache.end()) it = cache.emplace(s.twice(), build_tables(s)).first;
  return *it->second;
}

CMatrix jy_exponential(SpinJ s, double angle) {
  const SpinTables& t = tables(s);
  CVector ph(s.dim());
  for (int i = 0; i < s.dim(); ++i) ph(i) = std::exp(cdouble(0.0, angle * t.jy_eig(i)));
  return t.jy_vec * ph.asDiagonal() * t.jy_vec.adjoint();
}

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int factorial(int n) {
  static std::mutex mu;
  static std::vector<cpp_int> table{1};
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(table.size()) <= n) table.push_back(table.back() * table.size());
  return table[n];
}

int to_twice(double x, const char* what) {
  const double t = 2.0 * x;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9) throw DomainError(std::string("clebsch_gordan: ") + what + " is not a half-integer");
  return static_cast<int>(r);
}

}  // namespace

Axis parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw ConfigError("unknown axis '" + std::string(name) + "'");
}

const char* axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

DickeKet::DickeKet(SpinJ s, Axis a, CVector v) : spin(s), axis(a), amps(std::move(v)) {
  if (amps.size() != s.dim()) throw DomainError("DickeKet: amplitude length must be 2J+1");
}

DickeKet DickeKet::basis_state(SpinJ s, Axis a, int twice_m) {
  if (std::abs(twice_m) > s.twice() || (twice_m + s.twice()) % 2 != 0)
    throw DomainError("DickeKet::basis_state: m out of range");
  CVector v = CVector::Zero(s.dim());
  v(s.index_of_twice_m(twice_m)) = 1.0;
  return DickeKet(s, a, std::move(v));
}

bool DickeKet::is_normalized(double tol) const { return std::abs(amps.squaredNorm() - 1.0) <= tol; }

DickeKet DickeKet::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw DomainError("DickeKet::normalized: zero vector");
  return DickeKet(spin, axis, amps / n);
}

MatterDensity MatterDensity::from_ket(const DickeKet& ket) {
  const CVector z = basis_change(ket, Axis::Z).amps;
  return {ket.spin, z * z.adjoint()};
}

MatterDensity MatterDensity::maximally_mixed(SpinJ s) {
  return {s, CMatrix::Identity(s.dim(), s.dim()) / static_cast<double>(s.dim())};
}

CMatrix CollectiveOp::matrix() const {
  const SpinTables& t = tables(spin);
  switch (kind) {
    case CollectiveKind::Jx: return t.jx;
    case CollectiveKind::Jy: return t.jy;
    case CollectiveKind::Jz: return t.jz;
    case CollectiveKind::Jplus: return t.jplus;
    case CollectiveKind::Jminus: return t.jplus.adjoint();
    case CollectiveKind::AxisDot: {
      const double n = std::hypot(direction[0], direction[1], direction[2]);
      if (std::abs(n - 1.0) > 1e-9) throw DomainError("CollectiveOp: direction must be a unit vector");
      return direction[0] * t.jx + direction[1] * t.jy + direction[2] * t.jz;
    }
  }
  return {};
}

CMatrix spin_jx(SpinJ s) { return tables(s).jx; }
CMatrix spin_jy(SpinJ s) { return tables(s).jy; }
CMatrix spin_jz(SpinJ s) { return tables(s).jz; }
CMatrix spin_jplus(SpinJ s) { return tables(s).jplus; }
CMatrix spin_jminus(SpinJ s) { return tables(s).jplus.adjoint(); }

CMatrix rotation_matrix(SpinJ s, double theta, double phi) {
  CMatrix r = jy_exponential(s, theta);
  for (int i = 0; i < s.dim(); ++i) r.row(i) *= std::exp(cdouble(0.0, phi * s.m_at(i)));
  return r;
}

const CMatrix& axis_basis(SpinJ s, Axis axis) {
  const SpinTables& t = tables(s);
  switch (axis) {
    case Axis::X: return t.x_basis;
    case Axis::Y: return t.y_basis;
    case Axis::Z: break;
  }
  return t.z_basis;
}

DickeKet basis_change(const DickeKet& ket, Axis target) {
  if (ket.axis == target) return ket;
  CVector z = ket.axis == Axis::Z ? ket.amps : CVector(axis_basis(ket.spin, ket.axis) * ket.amps);
  if (target == Axis::Z) return DickeKet(ket.spin, Axis::Z, std::move(z));
  return DickeKet(ket.spin, target, axis_basis(ket.spin, target).adjoint() * z);
}

CVector apply_euler_rotation(SpinJ s, double alpha, double beta, double gamma, const CVector& psi) {
  CVector v(psi.size());
  for (int i = 0; i < s.dim(); ++i) v(i) = psi(i) * std::exp(cdouble(0.0, -gamma * s.m_at(i)));
  v = jy_exponential(s, -beta) * v;
  for (int i = 0; i < s.dim(); ++i) v(i) *= std::exp(cdouble(0.0, -alpha * s.m_at(i)));
  return v;
}

CVector apply_qubit_unitary(SpinJ s, const Eigen::Matrix2cd& u, const CVector& psi) {
  // u = e^{i chi} exp(-i alpha Sz) exp(-i beta Sy) exp(-i gamma Sz), basis (up, down).
  // The angles are kept unreduced so the same SU(2) element lifts to every J.
  const double chi = 0.5 * std::arg(u.determinant());
  const Eigen::Matrix2cd v = u * std::exp(cdouble(0.0, -chi));
  const double beta = 2.0 * std::atan2(std::abs(v(1, 0)), std::abs(v(0, 0)));
  const double sum = std::abs(v(0, 0)) > 1e-300 ? -2.0 * std::arg(v(0, 0)) : 0.0;
  const double diff = std::abs(v(1, 0)) > 1e-300 ? 2.0 * std::arg(v(1, 0)) : 0.0;
  const double alpha = 0.5 * (sum + diff);
  const double gamma = 0.5 * (sum - diff);
  CVector out = apply_euler_rotation(s, alpha, beta, gamma, psi);
  return out * std::exp(cdouble(0.0, chi * s.twice()));
}

CVector product_state(SpinJ s, cdouble up, cdouble down) {
  const int n = s.twice();
  CVector c = CVector::Zero(n + 1);
  const bool up_zero = up == cdouble(0.0), down_zero = down == cdouble(0.0);
  const cdouble lu = up_zero ? cdouble(0.0) : std::log(up);
  const cdouble ld = down_zero ? cdouble(0.0) : std::log(down);
  for (int k = 0; k <= n; ++k) {
    if ((up_zero && k > 0) || (down_zero && n - k > 0)) continue;
    c(k) = std::exp(0.5 * log_binomial(n, k) + static_cast<double>(k) * lu +
                    static_cast<double>(n - k) * ld);
  }
  return c;
}

CVector apply_equatorial_rotation(SpinJ s, double angle, double azimuth, const CVector& psi) {
  const CMatrix& x = axis_basis(s, Axis::X);
  CVector v(psi.size());
  for (int i = 0; i < s.dim(); ++i) v(i) = psi(i) * std::exp(cdouble(0.0, azimuth * s.m_at(i)));
  v = x.adjoint() * v;
  for (int i = 0; i < s.dim(); ++i) v(i) *= std::exp(cdouble(0.0, -angle * s.m_at(i)));
  v = x * v;
  for (int i = 0; i < s.dim(); ++i) v(i) *= std::exp(cdouble(0.0, -azimuth * s.m_at(i)));
  return v;
}

double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tj, int tm) {
  if (tj1 < 0 || tj2 < 0 || tj < 0) throw DomainError("clebsch_gordan: negative angular momentum");
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tm) > tj)
    throw DomainError("clebsch_gordan: |m| exceeds j");
  if ((tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj + tm) % 2 != 0)
    throw DomainError("clebsch_gordan: j and m must both be integer or both half-integer");
  if ((tj1 + tj2 + tj) % 2 != 0) throw DomainError("clebsch_gordan: j1 + j2 + J must be an integer");
  if (tm != tm1 + tm2) return 0.0;
  if (tj < std::abs(tj1 - tj2) || tj > tj1 + tj2) return 0.0;

  const int a = (tj1 + tj2 - tj) / 2, b = (tj1 - tm1) / 2, c = (tj2 + tm2) / 2;
  const int d = (tj - tj2 + tm1) / 2, e = (tj - tj1 - tm2) / 2;
  cpp_rational pre(cpp_int(tj + 1) * factorial((tj + tj1 - tj2) / 2) * factorial((tj - tj1 + tj2) / 2) *
                       factorial(a),
                   factorial((tj1 + tj2 + tj) / 2 + 1));
  pre *= factorial((tj + tm) / 2) * factorial((tj - tm) / 2) * factorial((tj1 - tm1) / 2) *
         factorial((tj1 + tm1) / 2) * factorial((tj2 - tm2) / 2) * factorial((tj2 + tm2) / 2);
  // Racah sum over a common denominator q, so each term is an exact integer.
  const int kmin = std::max({0, -d, -e});
  const int kmax = std::min({a, b, c});
  if (kmin > kmax) return 0.0;
  const cpp_int q = factorial(kmax) * factorial(a - kmin) * factorial(b - kmin) * factorial(c - kmin) *
                    factorial(d + kmax) * factorial(e + kmax);
  cpp_int num = 0;
  for (int k = kmin; k <= kmax; ++k) {
    const cpp_int den = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k) *
                        factorial(d + k) * factorial(e + k);
    const cpp_int term = q / den;
    if (k % 2) num -= term;
    else num += term;
  }
  if (num == 0) return 0.0;
  const cpp_rational sum(num, q);
  const cpp_rational sq = pre * sum * sum;
  const long double mag = std::sqrt(sq.convert_to<long double>());
  return static_cast<double>(sum < 0 ? -mag : mag);
}

double clebsch_gordan(double j1, double m1, double j2, double m2, double j, double m) {
  return clebsch_gordan(to_twice(j1, "j1"), to_twice(m1, "m1"), to_twice(j2, "j2"), to_twice(m2, "m2"),
                        to_twice(j, "J"), to_twice(m, "M"));
}

double log_binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("log_binomial: requires 0 <= k <= n");
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace bsv

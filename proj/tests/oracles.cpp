#include "oracles.hpp"

#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

namespace oracle {

CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  CVector ph(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) ph(i) = std::polar(1.0, -t * es.eigenvalues()(i));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix expm_antihermitian(const CMatrix& a) {
  // A = -i H with H = i A Hermitian, so exp(A) = exp(-i H).
  const CMatrix h = cdouble(0.0, 1.0) * a;
  return expm_hermitian(0.5 * (h + h.adjoint()), 1.0);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {
CMatrix pauli(int axis) {
  CMatrix s(2, 2);
  // basis (up, down)
  if (axis == 0) s << 0, 1, 1, 0;
  if (axis == 1) s << 0, cdouble(0, -1), cdouble(0, 1), 0;
  if (axis == 2) s << 1, 0, 0, -1;
  return s;
}
}  // namespace

CMatrix qubit_collective(int n, int axis) {
  const Eigen::Index dim = Eigen::Index(1) << n;
  CMatrix total = CMatrix::Zero(dim, dim);
  for (int q = 0; q < n; ++q) {
    CMatrix term = CMatrix::Identity(1, 1);
    for (int p = 0; p < n; ++p) term = kron(term, p == q ? pauli(axis) : CMatrix::Identity(2, 2));
    total += 0.5 * term;
  }
  return total;
}

CMatrix dicke_embedding(int n) {
  const Eigen::Index dim = Eigen::Index(1) << n;
  CMatrix e = CMatrix::Zero(dim, n + 1);
  for (Eigen::Index b = 0; b < dim; ++b) {
    // bit p set means qubit p is down (basis index 1)
    int ups = 0;
    for (int p = 0; p < n; ++p)
      if (!((b >> (n - 1 - p)) & 1)) ++ups;
    e(b, ups) = 1.0;
  }
  for (int k = 0; k <= n; ++k) e.col(k) /= std::sqrt(static_cast<double>(binomial(n, k)));
  return e;
}

CMatrix restrict_symmetric(const CMatrix& op, int n) {
  const CMatrix e = dicke_embedding(n);
  return e.adjoint() * op * e;
}

CMatrix tensor_power(const Eigen::Matrix2cd& u, int n) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (int i = 0; i < n; ++i) out = kron(out, CMatrix(u));
  return out;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::array<CMatrix, 3> spin_matrices(int tj) {
  const int d = tj + 1;
  const double j = 0.5 * tj;
  CMatrix jp = CMatrix::Zero(d, d), jz = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double m = -j + i;
    jz(i, i) = m;
    if (i + 1 < d) jp(i + 1, i) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  const CMatrix jm = jp.adjoint();
  return {0.5 * (jp + jm), cdouble(0.0, -0.5) * (jp - jm), jz};
}

double cg_by_lowering(int tj1, int tm1, int tj2, int tm2, int tj, int tm) {
  // Product basis |m1> (x) |m2>, index i1 * d2 + i2 with i = (tm + tj) / 2.
  const int d1 = tj1 + 1, d2 = tj2 + 1;
  const auto s1 = spin_matrices(tj1), s2 = spin_matrices(tj2);
  const CMatrix i1 = CMatrix::Identity(d1, d1), i2 = CMatrix::Identity(d2, d2);
  const cdouble I(0.0, 1.0);
  const CMatrix jm = kron(s1[0] - I * s1[1], i2) + kron(i1, s2[0] - I * s2[1]);
  const CMatrix j2 = [&] {
    CMatrix sum = CMatrix::Zero(d1 * d2, d1 * d2);
    for (int a = 0; a < 3; ++a) {
      const CMatrix ja = kron(s1[a], i2) + kron(i1, s2[a]);
      sum += ja * ja;
    }
    return sum;
  }();
  // Highest-weight state of total spin J: in the M = J sector, the J^2 eigenvector
  // with eigenvalue J(J+1), phase fixed so <j1 j1; j2 (J - j1)|J J> > 0.
  const double J = 0.5 * tj;
  std::vector<int> sector;
  for (int a = 0; a < d1; ++a)
    for (int b = 0; b < d2; ++b)
      if ((2 * a - tj1) + (2 * b - tj2) == tj) sector.push_back(a * d2 + b);
  if (sector.empty()) return 0.0;
  CMatrix sub(sector.size(), sector.size());
  for (std::size_t x = 0; x < sector.size(); ++x)
    for (std::size_t y = 0; y < sector.size(); ++y) sub(x, y) = j2(sector[x], sector[y]);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sub);
  int pick = -1;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k) - J * (J + 1)) < 1e-8) pick = static_cast<int>(k);
  if (pick < 0) return 0.0;
  CVector top = CVector::Zero(d1 * d2);
  for (std::size_t x = 0; x < sector.size(); ++x) top(sector[x]) = es.eigenvectors()(x, pick);
  // Condon-Shortley: the component with m1 = j1 is positive.
  cdouble ref = 0.0;
  for (int b = 0; b < d2; ++b)
    if (std::abs(top((d1 - 1) * d2 + b)) > 1e-12) ref = top((d1 - 1) * d2 + b);
  top *= std::conj(ref) / std::abs(ref);
  // Lower to M.
  CVector v = top;
  for (int twoM = tj; twoM > tm; twoM -= 2) {
    v = jm * v;
    v.normalize();
  }
  const int a = (tm1 + tj1) / 2, b = (tm2 + tj2) / 2;
  return v(a * d2 + b).real();
}

CMatrix annihilation(int n_max) {
  CMatrix a = CMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

double pure_qfi(const CVector& psi_in, const std::array<CMatrix, 3>& j) {
  const CVector psi = psi_in.normalized();
  Eigen::Matrix3d cov;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const cdouble ab = psi.dot(0.5 * (j[a] * j[b] + j[b] * j[a]) * psi);
      const cdouble ea = psi.dot(j[a] * psi), eb = psi.dot(j[b] * psi);
      cov(a, b) = (ab - ea * eb).real();
    }
  return 4.0 * Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvalues().maxCoeff();
}

CVector random_ket(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = cdouble(nd(rng), nd(rng));
  return v.normalized();
}

}  // namespace oracle

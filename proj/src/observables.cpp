#include "bsv/observables.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <gsl/gsl_integration.h>
#include <Eigen/Eigenvalues>

namespace bsv {

namespace {

QfiResult top_eigen(const Eigen::Matrix3d& m, double scale) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(0.5 * (m + m.transpose()));
  Eigen::Vector3d v = es.eigenvectors().col(2);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0) v = -v;
  return {scale * es.eigenvalues()(2), {v(0), v(1), v(2)}};
}

}  // namespace

Eigen::Matrix3d spin_covariance(const DickeKet& ket) {
  const CVector z = basis_change(ket, Axis::Z).normalized().amps;
  const SpinJ s = ket.spin;
  const CVector v[3] = {spin_jx(s) * z, spin_jy(s) * z, spin_jz(s) * z};
  double mean[3];
  for (int a = 0; a < 3; ++a) mean[a] = z.dot(v[a]).real();
  Eigen::Matrix3d c;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) c(a, b) = v[a].dot(v[b]).real() - mean[a] * mean[b];
  return c;
}

QfiResult qfi(const DickeKet& ket) { return top_eigen(spin_covariance(ket), 4.0); }

MatterDensity regularize_density(const MatterDensity& rho, double negative_floor) {
  const CMatrix h = 0.5 * (rho.rho + rho.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  RVector lam = es.eigenvalues();
  if (lam.minCoeff() < -negative_floor)
    throw DomainError("density matrix is not positive semidefinite (eigenvalue " +
                      std::to_string(lam.minCoeff()) + ")");
  lam = lam.cwiseMax(0.0);
  const double tr = lam.sum();
  if (!(tr > 0.0)) throw DomainError("density matrix has zero trace");
  lam /= tr;
  return {rho.spin, es.eigenvectors() * lam.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint()};
}

QfiResult qfi(const MatterDensity& rho) {
  const CMatrix h = 0.5 * (rho.rho + rho.rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  RVector lam = es.eigenvalues();
  if (lam.minCoeff() < -1e-10)
    throw DomainError("qfi: density matrix is not positive semidefinite (eigenvalue " +
                      std::to_string(lam.minCoeff()) + ")");
  lam = lam.cwiseMax(0.0);
  lam /= lam.sum();
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) < 1e-12) lam(i) = 0.0;
  const CMatrix& u = es.eigenvectors();
  const SpinJ s = rho.spin;
  const CMatrix ops[3] = {u.adjoint() * spin_jx(s) * u, u.adjoint() * spin_jy(s) * u,
                          u.adjoint() * spin_jz(s) * u};
  const Eigen::Index d = lam.size();
  RMatrix coef = RMatrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double sum = lam(i) + lam(j);
      if (sum < 1e-12) continue;
      const double diff = lam(i) - lam(j);
      coef(i, j) = 2.0 * diff * diff / sum;
    }
  Eigen::Matrix3d f;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          if (coef(i, j) != 0.0) acc += coef(i, j) * (ops[a](i, j) * ops[b](j, i)).real();
      f(a, b) = f(b, a) = acc;
    }
  return top_eigen(f, 1.0);
}

double fidelity(const DickeKet& a, const DickeKet& b) {
  if (!(a.spin == b.spin)) throw DomainError("fidelity: kets have different J");
  const CVector za = basis_change(a, Axis::Z).amps;
  const CVector zb = basis_change(b, Axis::Z).amps;
  return std::norm(za.dot(zb)) / (za.squaredNorm() * zb.squaredNorm());
}

double trace_distance(const MatterDensity& a, const MatterDensity& b) {
  const CMatrix d = a.rho - b.rho;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

SphereGrid SphereGrid::gauss_legendre(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw ConfigError("SphereGrid: grid must be nonempty");
  SphereGrid g;
  g.thetas.resize(n_theta);
  g.theta_weights.resize(n_theta);
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, i, &x, &w, table);
    g.thetas(i) = std::acos(x);
    g.theta_weights(i) = w;
  }
  gsl_integration_glfixed_table_free(table);
  g.phis.resize(n_phi);
  g.phi_weights = RVector::Constant(n_phi, 2.0 * M_PI / n_phi);
  for (int j = 0; j < n_phi; ++j) g.phis(j) = 2.0 * M_PI * j / n_phi;
  g.values = RMatrix::Zero(n_theta, n_phi);
  return g;
}

SphereGrid SphereGrid::uniform(int n_theta, int n_phi) {
  if (n_theta < 2 || n_phi < 1) throw ConfigError("SphereGrid: uniform grid needs n_theta >= 2");
  SphereGrid g;
  g.thetas = RVector::LinSpaced(n_theta, 0.0, M_PI);
  // Trapezoid in theta with the sin(theta) Jacobian folded in.
  const double h = M_PI / (n_theta - 1);
  g.theta_weights.resize(n_theta);
  for (int i = 0; i < n_theta; ++i)
    g.theta_weights(i) = h * std::sin(g.thetas(i)) * ((i == 0 || i == n_theta - 1) ? 0.5 : 1.0);
  g.phis.resize(n_phi);
  g.phi_weights = RVector::Constant(n_phi, 2.0 * M_PI / n_phi);
  for (int j = 0; j < n_phi; ++j) g.phis(j) = 2.0 * M_PI * j / n_phi;
  g.values = RMatrix::Zero(n_theta, n_phi);
  return g;
}

double SphereGrid::integrate() const { return theta_weights.dot(values * phi_weights); }

RVector wigner_kernel_weights(SpinJ s) {
  static std::mutex mu;
  static std::map<int, RVector> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(s.twice());
  if (it != cache.end()) return it->second;
  const int tj = s.twice();
  RVector w = RVector::Zero(s.dim());
  for (int i = 0; i < s.dim(); ++i) {
    const int tm = -tj + 2 * i;
    for (int k = 0; k <= tj; ++k)
      w(i) += (2.0 * k + 1.0) / (tj + 1.0) * clebsch_gordan(tj, tm, 2 * k, 0, tj, tm);
  }
  cache.emplace(tj, w);
  return w;
}

SphereGrid spin_wigner(const MatterDensity& rho, SphereGrid grid) {
  if (grid.thetas.size() == 0 || grid.phis.size() == 0) throw ConfigError("spin_wigner: empty grid");
  const SpinJ s = rho.spin;
  const int d = s.dim();
  const RVector w = wigner_kernel_weights(s);
  const Eigen::Index nt = grid.thetas.size(), np = grid.phis.size();
  grid.values.resize(nt, np);
  // W = sum_k e^{-i phi k} S_k(theta), S_k = sum_{a-b=k} rho_ab K_ba, K = d(theta) diag(w) d(theta)^+
  CMatrix sk(2 * d - 1, 1);
  for (Eigen::Index it = 0; it < nt; ++it) {
    const CMatrix dt = rotation_matrix(s, grid.thetas(it), 0.0);
    const CMatrix k = dt * w.cast<cdouble>().asDiagonal() * dt.adjoint();
    sk.setZero();
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) sk(a - b + d - 1, 0) += rho.rho(a, b) * k(b, a);
    for (Eigen::Index ip = 0; ip < np; ++ip) {
      cdouble acc = 0.0;
      for (int kk = -(d - 1); kk <= d - 1; ++kk)
        acc += std::polar(1.0, -grid.phis(ip) * kk) * sk(kk + d - 1, 0);
      grid.values(it, ip) = acc.real();
    }
  }
  return grid;
}

}  // namespace bsv

#include "bsv/fullsim.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bsv/fit.hpp"
#include "bsv/observables.hpp"
#include "bsv/parallel.hpp"

namespace bsv {

CouplingModel parse_coupling_model(const std::string& name) {
  if (name == "TC" || name == "tc" || name == "tavis-cummings") return CouplingModel::TavisCummings;
  if (name == "Dicke" || name == "dicke") return CouplingModel::Dicke;
  throw ConfigError("unknown coupling model '" + name + "' (expected TC or Dicke)");
}

void FullSimParams::validate() const {
  if (N < 1) throw ConfigError("FullSimParams: N must be positive");
  if (!(g >= 0.0)) throw ConfigError("FullSimParams: g must be non-negative");
  if (!(r >= 0.0)) throw ConfigError("FullSimParams: r must be non-negative");
}

TotalKet TotalKet::product(const DickeKet& matter, const FockKet& light) {
  TotalKet k;
  k.spin = matter.spin;
  k.n_max = light.n_max;
  const CVector z = basis_change(matter, Axis::Z).amps;
  k.amps.resize(static_cast<Eigen::Index>(z.size()) * (light.n_max + 1));
  for (Eigen::Index i = 0; i < z.size(); ++i)
    k.amps.segment(i * (light.n_max + 1), light.n_max + 1) = z(i) * light.amps;
  return k;
}

HamiltonianAction::HamiltonianAction(const FullSimParams& p, int n_max, bool include_free)
    : p_(p), spin_(p.spin()), n_max_(n_max), include_free_(include_free) {
  p.validate();
  if (n_max < 0) throw ConfigError("HamiltonianAction: n_max must be non-negative");
  const double j = spin_.value();
  raise_.resize(spin_.dim());
  lower_.resize(spin_.dim());
  for (int i = 0; i < spin_.dim(); ++i) {
    const double m = spin_.m_at(i);
    raise_(i) = std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0)));
    lower_(i) = std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m - 1.0)));
  }
  sqrt_n_.resize(n_max + 2);
  for (int n = 0; n <= n_max + 1; ++n) sqrt_n_(n) = std::sqrt(static_cast<double>(n));
}

int HamiltonianAction::max_row_nonzeros() const {
  return (include_free_ ? 1 : 0) + (p_.model == CouplingModel::Dicke ? 4 : 2);
}

void HamiltonianAction::apply(const CVector& in, CVector& out) const {
  ++applications_;
  const int d = spin_.dim(), stride = n_max_ + 1;
  out.resize(in.size());
  const cdouble* x = in.data();
  cdouble* y = out.data();
  if (include_free_) {
    for (int i = 0; i < d; ++i) {
      const double em = p_.delta * spin_.m_at(i);
      for (int n = 0; n < stride; ++n) y[i * stride + n] = (p_.omega * n + em) * x[i * stride + n];
    }
  } else {
    std::fill(y, y + in.size(), cdouble(0.0));
  }
  const cdouble mig(0.0, -p_.g), pig(0.0, p_.g);
  const bool dicke = p_.model == CouplingModel::Dicke;
  for (int i = 0; i < d; ++i) {
    const cdouble* xi = x + i * stride;
    if (i + 1 < d) {
      // -i g a J+ : (m, n) -> (m+1, n-1)
      cdouble* yu = y + (i + 1) * stride;
      const cdouble c = mig * raise_(i);
      for (int n = 1; n < stride; ++n) yu[n - 1] += c * sqrt_n_(n) * xi[n];
      if (dicke) {
        // +i g a^dag J+ : (m, n) -> (m+1, n+1)
        const cdouble c2 = pig * raise_(i);
        for (int n = 0; n + 1 < stride; ++n) yu[n + 1] += c2 * sqrt_n_(n + 1) * xi[n];
      }
    }
    if (i > 0) {
      // +i g a^dag J- : (m, n) -> (m-1, n+1)
      cdouble* yd = y + (i - 1) * stride;
      const cdouble c = pig * lower_(i);
      for (int n = 0; n + 1 < stride; ++n) yd[n + 1] += c * sqrt_n_(n + 1) * xi[n];
      if (dicke) {
        // -i g a J- : (m, n) -> (m-1, n-1)
        const cdouble c2 = mig * lower_(i);
        for (int n = 1; n < stride; ++n) yd[n - 1] += c2 * sqrt_n_(n) * xi[n];
      }
    }
  }
}

void taylor4_step(CVector& psi, const HamiltonianAction& h, double dt, double max_drift) {
  const double before = psi.squaredNorm();
  CVector term = psi, next(psi.size());
  CVector acc = psi;
  for (int k = 1; k <= 4; ++k) {
    h.apply(term, next);
    term = next * cdouble(0.0, -dt / k);
    acc += term;
  }
  const double after = acc.squaredNorm();
  if (std::abs(after - before) > max_drift) {
    std::ostringstream os;
    os << "taylor4_step: norm drift " << std::abs(after - before) << " in one step at dt=" << dt
       << "; reduce dt";
    throw InstabilityError(os.str());
  }
  psi.swap(acc);
}

TotalKet initial_state(const FullSimParams& p, int n_max, double leakage_tol) {
  p.validate();
  TotalKet k = TotalKet::product(DickeKet::ground(p.spin()), squeezed_vacuum_fock(p.r, n_max, leakage_tol));
  k.frame = p.resonant_tc() ? Frame::Interaction : Frame::Lab;
  return k;
}

double total_norm_squared(const TotalKet& state) { return state.amps.squaredNorm(); }

double excitation_number(const TotalKet& state) {
  const auto m = state.as_matrix();
  double s = 0.0;
  for (int i = 0; i < state.spin.dim(); ++i)
    for (int n = 0; n <= state.n_max; ++n) s += std::norm(m(n, i)) * (state.spin.m_at(i) + n);
  return s;
}

double top_fock_occupation(const TotalKet& state, double fraction) {
  const int levels = std::max(1, static_cast<int>(std::ceil(fraction * (state.n_max + 1))));
  return state.as_matrix().bottomRows(levels).squaredNorm();
}

EvolveReport evolve(TotalKet& state, const FullSimParams& p, const SimConfig& config,
                    const std::function<void(const TotalKet&)>& observer) {
  p.validate();
  if (!(config.dt > 0.0)) throw ConfigError("SimConfig: dt must be positive");
  if (config.report_stride < 1) throw ConfigError("SimConfig: report_stride must be >= 1");
  const bool interaction = state.frame == Frame::Interaction;
  if (interaction && !p.resonant_tc())
    throw ConfigError("evolve: interaction-picture state requires the resonant TC model");
  const HamiltonianAction h(p, state.n_max, !interaction);
  EvolveReport rep;
  const double norm0 = total_norm_squared(state);
  const long steps = std::lround((config.t_end - state.t) / config.dt);
  const double t0 = state.t;
  auto monitor = [&] {
    rep.max_norm_drift = std::max(rep.max_norm_drift, std::abs(total_norm_squared(state) - norm0));
    const double top = top_fock_occupation(state);
    if (top > rep.max_top_occupation) {
      if (top > config.top_occupation_warning && rep.max_top_occupation <= config.top_occupation_warning) {
        std::ostringstream os;
        os << "top Fock levels hold " << top << " at t=" << state.t << "; suggest n_max >= "
           << static_cast<int>(std::ceil(1.5 * state.n_max));
        rep.warnings.push_back(os.str());
      }
      rep.max_top_occupation = top;
    }
    if (observer) observer(state);
  };
  monitor();
  for (long s = 1; s <= steps; ++s) {
    taylor4_step(state.amps, h, config.dt);
    state.t = t0 + s * config.dt;
    ++rep.steps;
    if (s % config.report_stride == 0 || s == steps) monitor();
  }
  if (rep.max_norm_drift > 1e-8) rep.warnings.push_back("norm drift exceeded 1e-8 over the run");
  return rep;
}

namespace {

// Lab-frame amplitudes as a (n_max+1) x d matrix.
CMatrix lab_matrix(const TotalKet& state, const FullSimParams& p) {
  CMatrix m = state.as_matrix();
  if (state.frame == Frame::Lab) return m;
  for (int i = 0; i < state.spin.dim(); ++i)
    for (int n = 0; n <= state.n_max; ++n)
      m(n, i) *= std::polar(1.0, -(p.omega * n + p.delta * state.spin.m_at(i)) * state.t);
  return m;
}

}  // namespace

QuadratureHerald herald_quadrature_exact(const TotalKet& state, const FullSimParams& p, const HeraldSpec& herald) {
  if (!herald.ideal()) throw ConfigError("herald_quadrature_exact: only ideal projections are supported");
  const CVector bra = quadrature_fock_overlap(herald.q(), herald.phi(), state.n_max);
  const CVector ket = lab_matrix(state, p).transpose() * bra;
  const double prob = ket.squaredNorm();
  return {DickeKet(state.spin, Axis::Z, ket), prob};
}

DickeKet to_rotating_frame(const DickeKet& lab, double omega, double t) {
  CVector z = basis_change(lab, Axis::Z).amps;
  for (int i = 0; i < lab.spin.dim(); ++i) z(i) *= std::polar(1.0, omega * t * lab.spin.m_at(i));
  return DickeKet(lab.spin, Axis::Z, std::move(z));
}

MatterDensity to_rotating_frame(const MatterDensity& lab, double omega, double t) {
  CVector ph(lab.spin.dim());
  for (int i = 0; i < lab.spin.dim(); ++i) ph(i) = std::polar(1.0, omega * t * lab.spin.m_at(i));
  return {lab.spin, ph.asDiagonal() * lab.rho * ph.conjugate().asDiagonal()};
}

MatterDensity partial_trace_matter(const TotalKet& state, const FullSimParams& p) {
  const auto m = state.as_matrix();
  CMatrix rho = m.transpose() * m.conjugate();
  if (state.frame == Frame::Interaction) {
    CVector ph(state.spin.dim());
    for (int i = 0; i < state.spin.dim(); ++i) ph(i) = std::polar(1.0, -p.delta * state.t * state.spin.m_at(i));
    rho = ph.asDiagonal() * rho * ph.conjugate().asDiagonal();
  }
  return {state.spin, rho};
}

namespace {

constexpr const char* kCheckpointMagic = "bsv-checkpoint";
constexpr int kCheckpointVersion = 1;

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void save_checkpoint(const TotalKet& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_checkpoint: cannot open " + path);
  const char* bytes = reinterpret_cast<const char*>(state.amps.data());
  const std::size_t nbytes = sizeof(cdouble) * static_cast<std::size_t>(state.amps.size());
  std::ostringstream header;
  header.precision(17);
  header << kCheckpointMagic << ' ' << kCheckpointVersion << '\n'
         << state.spin.twice() << ' ' << state.n_max << ' ' << state.t << ' '
         << (state.frame == Frame::Lab ? "lab" : "interaction") << ' ' << state.amps.size() << ' '
         << fnv1a(bytes, nbytes) << '\n';
  out << header.str();
  out.write(bytes, static_cast<std::streamsize>(nbytes));
  if (!out) throw ConfigError("save_checkpoint: write failed for " + path);
}

TotalKet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_checkpoint: cannot open " + path);
  std::string magic, frame;
  int version = 0, twice = 0, n_max = 0;
  long count = 0;
  double t = 0.0;
  std::uint64_t hash = 0;
  in >> magic >> version >> twice >> n_max >> t >> frame >> count >> hash;
  if (!in || magic != kCheckpointMagic || version != kCheckpointVersion)
    throw ConfigError("load_checkpoint: unrecognized header in " + path);
  in.get();
  TotalKet k;
  k.spin = SpinJ(twice);
  k.n_max = n_max;
  k.t = t;
  k.frame = frame == "lab" ? Frame::Lab : Frame::Interaction;
  if (count != static_cast<long>(k.spin.dim()) * (n_max + 1))
    throw ConfigError("load_checkpoint: amplitude count does not match J and n_max");
  k.amps.resize(count);
  char* bytes = reinterpret_cast<char*>(k.amps.data());
  const std::size_t nbytes = sizeof(cdouble) * static_cast<std::size_t>(count);
  in.read(bytes, static_cast<std::streamsize>(nbytes));
  if (!in || fnv1a(bytes, nbytes) != hash) throw ConfigError("load_checkpoint: checksum mismatch in " + path);
  return k;
}

AppendixScanReport appendix_a_scan(const AppendixScanConfig& c) {
  if (c.N_list.size() < 2) throw ConfigError("appendix_a_scan: a fit needs at least two particle numbers");
  if (c.r_grid.size() < 3) throw ConfigError("appendix_a_scan: r grid needs at least three points");
  if (!(c.g > 0.0) || !(c.g_dt > 0.0) || !(c.span > 0.0)) throw ConfigError("appendix_a_scan: g, g_dt, span must be positive");
  AppendixScanReport rep;
  rep.N_list = c.N_list;
  const std::size_t nr = c.r_grid.size();
  rep.points.resize(c.N_list.size() * nr);
  parallel_for(rep.points.size(), [&](std::size_t idx) {
    const int N = c.N_list[idx / nr];
    const double r = c.r_grid[idx % nr];
    FullSimParams p;
    p.model = CouplingModel::TavisCummings;
    p.N = N;
    p.g = c.g;
    p.r = r;
    const int n_max = c.n_max > 0 ? c.n_max : std::max(16, squeezed_vacuum_required_n_max(r, c.leakage_tol) + 2);
    TotalKet state = initial_state(p, n_max, c.leakage_tol);
    SimConfig cfg;
    cfg.dt = c.g_dt / c.g;
    cfg.n_max = n_max;
    cfg.t_end = c.span / (c.g * std::sqrt(static_cast<double>(N)));
    cfg.report_stride = c.report_stride;
    ScanPoint pt{N, r, 0.0, 0.0, n_max};
    evolve(state, p, cfg, [&](const TotalKet& s) {
      const double q = qfi(partial_trace_matter(s, p)).value / N;
      if (q > pt.max_qfi_density) {
        pt.max_qfi_density = q;
        pt.t_peak = s.t;
      }
    });
    rep.points[idx] = pt;
  });
  for (std::size_t iN = 0; iN < c.N_list.size(); ++iN) {
    std::size_t best = 0;
    for (std::size_t ir = 1; ir < nr; ++ir)
      if (rep.points[iN * nr + ir].max_qfi_density > rep.points[iN * nr + best].max_qfi_density) best = ir;
    const ScanPoint& b = rep.points[iN * nr + best];
    double rc = b.r;
    if (best > 0 && best + 1 < nr) {
      const double h = c.r_grid[best + 1] - c.r_grid[best];
      rc = parabolic_peak(b.r, h, rep.points[iN * nr + best - 1].max_qfi_density, b.max_qfi_density,
                          rep.points[iN * nr + best + 1].max_qfi_density);
    }
    rep.r_c.push_back(rc);
    rep.max_density.push_back(b.max_qfi_density);
    rep.t_peak.push_back(b.t_peak);
    rep.scaled_peak_times.push_back(b.t_peak * c.g * std::sqrt(static_cast<double>(b.N)));
  }
  std::vector<double> ns(c.N_list.begin(), c.N_list.end());
  const PowerLawFit pf = power_law_fit(ns, rep.max_density);
  rep.power_coefficient = pf.coefficient;
  rep.power_exponent = pf.exponent;
  rep.power_rms_residual = pf.rms_residual;
  const LinearFit lf = log_fit(ns, rep.r_c);
  rep.log_slope = lf.slope;
  rep.log_intercept = lf.intercept;
  rep.log_rms_residual = lf.rms_residual;
  return rep;
}

}  // namespace bsv

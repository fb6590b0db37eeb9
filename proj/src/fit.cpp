#include "bsv/fit.hpp"

#include <cmath>
#include <vector>

#include "bsv/types.hpp"

namespace bsv {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("linear_fit: x and y differ in length");
  if (x.size() < 2) throw DomainError("linear_fit: need at least two points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("linear_fit: all x values coincide");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

PowerLawFit power_law_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw DomainError("power_law_fit: x must be positive");
    lx[i] = std::log(x[i]);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw DomainError("power_law_fit: y must be positive");
    ly[i] = std::log(y[i]);
  }
  const LinearFit l = linear_fit(lx, ly);
  return {std::exp(l.intercept), l.slope, l.rms_residual};
}

LinearFit log_fit(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw DomainError("log_fit: x must be positive");
    lx[i] = std::log(x[i]);
  }
  return linear_fit(lx, y);
}

double parabolic_peak(double x_mid, double h, double y_left, double y_mid, double y_right) {
  const double curv = y_left - 2.0 * y_mid + y_right;
  if (curv >= 0.0) return x_mid;
  const double shift = 0.5 * (y_left - y_right) / curv;
  return x_mid + h * std::max(-0.5, std::min(0.5, shift));
}

}  // namespace bsv

#pragma once

#include <span>

namespace bsv {

/// Ordinary least squares y = slope x + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// y = coefficient * x^exponent, fitted on log-log axes.
struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double rms_residual = 0.0;  // in ln y
};

PowerLawFit power_law_fit(std::span<const double> x, std::span<const double> y);

/// y = slope ln x + intercept.
LinearFit log_fit(std::span<const double> x, std::span<const double> y);

/// Abscissa of the vertex of the parabola through three equally spaced samples
/// centered at x_mid with spacing h; falls back to x_mid for a flat triple.
double parabolic_peak(double x_mid, double h, double y_left, double y_mid, double y_right);

}  // namespace bsv

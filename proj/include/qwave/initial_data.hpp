#pragma once

#include <string>

#include "qwave/grid.hpp"
#include "qwave/metric.hpp"
#include "qwave/solver.hpp"

namespace qwave {

enum class DataKind { Zero, Gaussian, DAlembert, OutgoingPulse, Bump, Manufactured };

std::string to_string(DataKind kind);
DataKind data_kind_from_string(const std::string& name);

/// Initial data family. Meaning of the shape fields per kind:
///   gaussian       u = A exp(-(r - center)^2 / width^2), v = 0
///   dalembert      exact solution (phi(r - t) - phi(-r - t)) / r, phi(s) = A exp(-(s - center)^2 / width^2)
///   outgoing       exact solution phi(t - r) / r with a smooth compact pulse of half-width `width`
///                  centred at r = center (needs center > width)
///   bump           u = A beta((r - center) / width), v = 0, beta smooth with support [-1, 1]
///   manufactured   w = A exp(-r^2 / width^2) cos(omega t), driven by the matching forcing
struct DataSpec {
  DataKind kind = DataKind::Gaussian;
  double amplitude = 1.0;
  double width = 1.0;
  double center = 0.0;
  double omega = 1.0;
};

/// Radius beyond which the data (and, for exact solutions, its t = 0 slice) is below 1e-16 A.
double data_radius(const DataSpec& spec);

/// Smooth compactly supported bump exp(1 - 1/(1 - x^2)) on |x| < 1, with two derivatives.
struct BumpValue {
  double f = 0, df = 0, d2f = 0;
};
BumpValue smooth_bump(double x);

/// Closed-form Minkowski linear solution, when the kind has one.
struct ExactValue {
  double u = 0, v = 0;
};
bool has_exact_solution(const DataSpec& spec);
ExactValue exact_solution(const DataSpec& spec, double t, double r);

FieldState make_initial_state(const DataSpec& spec, const RadialGrid& grid, double t = 0.0);

/// Samples the closed-form solution at time t (exact kinds and manufactured only).
FieldState exact_state(const DataSpec& spec, const RadialGrid& grid, double t);

/// F = (d_a G^{ab} d_b w) / s - w^5 for the manufactured solution w (no w^5 in linear mode).
Forcing manufactured_forcing(const DataSpec& spec, MetricPtr metric, OperatorMode mode, bool nonlinear = true);

}  // namespace qwave

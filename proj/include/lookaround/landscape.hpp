#pragma once

#include <span>
#include <vector>

#include "lookaround/types.hpp"

namespace lookaround::nn {

/// Orthonormal 2-D frame through three weight vectors: u = w_h - w_v and v is
/// (w_r - w_v) with its u component removed.
struct PlaneProjection {
  ParamVector origin;  // w_v
  ParamVector u_hat;
  ParamVector v_hat;
  double u_norm = 0.0;
  double v_norm = 0.0;

  std::size_t dimension() const noexcept { return origin.size(); }
};

/// Throws DomainError when the three points are (numerically) collinear,
/// i.e. the orthogonalized v has norm below 1e-12.
PlaneProjection plane_projection(std::span<const double> w_v, std::span<const double> w_h,
                                 std::span<const double> w_r);

struct PlaneCoords {
  double x = 0.0;
  double y = 0.0;
  ParamVector residual;  // w - point(x, y), the out-of-plane part

  double residual_norm() const;
};

/// origin + x * u_hat + y * v_hat
ParamVector plane_point(const PlaneProjection& proj, double x, double y);

PlaneCoords plane_coords(const PlaneProjection& proj, std::span<const double> w);

/// plane_point(x, y) + residual
ParamVector reconstruct(const PlaneProjection& proj, const PlaneCoords& c);

/// Evenly spaced values, both ends included. Point i is
/// (lo * (n-1-i) + hi * i) / (n-1), so a symmetric range with odd n hits 0 exactly.
std::vector<double> linspace(double lo, double hi, int n);

struct PlaneGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> loss;  // row-major: loss[iy * xs.size() + ix]

  double at(std::size_t ix, std::size_t iy) const { return loss[iy * xs.size() + ix]; }
};

/// Mean loss over `examples` at every grid point, with the weights unflattened
/// into the `widths` architecture. Resolution must be >= 2 per axis. Rows are
/// evaluated on up to `workers` threads; the output does not depend on it.
PlaneGrid plane_grid_eval(const PlaneProjection& proj, std::span<const int> widths, std::span<const Example> examples,
                          double x_lo, double x_hi, double y_lo, double y_hi, int resolution, int workers = 1);

}  // namespace lookaround::nn

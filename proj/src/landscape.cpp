#include "lookaround/landscape.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

#include "lookaround/mlp.hpp"

namespace lookaround::nn {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

ParamVector diff(std::span<const double> a, std::span<const double> b) {
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace

PlaneProjection plane_projection(std::span<const double> w_v, std::span<const double> w_h,
                                 std::span<const double> w_r) {
  require_same_size(w_h.size(), w_v.size(), "plane_projection w_h");
  require_same_size(w_r.size(), w_v.size(), "plane_projection w_r");
  if (w_v.empty()) throw std::invalid_argument("plane_projection: empty weight vectors");

  ParamVector u = diff(w_h, w_v);
  ParamVector v = diff(w_r, w_v);
  const double uu = dot(u, u);
  if (std::sqrt(uu) < 1e-12) throw DomainError("degenerate plane: w_h coincides with w_v");
  const double coef = dot(v, u) / uu;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= coef * u[i];

  PlaneProjection p;
  p.origin.assign(w_v.begin(), w_v.end());
  p.u_norm = std::sqrt(uu);
  p.v_norm = norm(v);
  if (p.v_norm < 1e-12) throw DomainError("degenerate plane: w_r lies on the line through w_v and w_h");
  // One re-orthogonalization pass keeps u_hat . v_hat at round-off level for
  // nearly collinear inputs.
  p.u_hat = std::move(u);
  for (double& x : p.u_hat) x /= p.u_norm;
  const double c2 = dot(v, p.u_hat);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c2 * p.u_hat[i];
  const double vn = norm(v);
  p.v_hat = std::move(v);
  for (double& x : p.v_hat) x /= vn;
  return p;
}

double PlaneCoords::residual_norm() const { return norm(residual); }

ParamVector plane_point(const PlaneProjection& proj, double x, double y) {
  ParamVector out(proj.origin.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = proj.origin[i] + x * proj.u_hat[i] + y * proj.v_hat[i];
  return out;
}

PlaneCoords plane_coords(const PlaneProjection& proj, std::span<const double> w) {
  require_same_size(w.size(), proj.origin.size(), "plane_coords");
  const ParamVector rel = diff(w, proj.origin);
  PlaneCoords c;
  c.x = dot(rel, proj.u_hat);
  c.y = dot(rel, proj.v_hat);
  const ParamVector p = plane_point(proj, c.x, c.y);
  c.residual = diff(w, p);
  return c;
}

ParamVector reconstruct(const PlaneProjection& proj, const PlaneCoords& c) {
  ParamVector out = plane_point(proj, c.x, c.y);
  require_same_size(c.residual.size(), out.size(), "reconstruct residual");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c.residual[i];
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace needs at least 2 points");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double m = static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = (lo * (m - i) + hi * static_cast<double>(i)) / m;
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

PlaneGrid plane_grid_eval(const PlaneProjection& proj, std::span<const int> widths, std::span<const Example> examples,
                          double x_lo, double x_hi, double y_lo, double y_hi, int resolution, int workers) {
  if (resolution < 2) throw std::invalid_argument("plane grid resolution must be >= 2 per axis");
  require_same_size(proj.origin.size(), param_count(widths), "plane grid architecture");
  PlaneGrid g;
  g.xs = linspace(x_lo, x_hi, resolution);
  g.ys = linspace(y_lo, y_hi, resolution);
  g.loss.assign(g.xs.size() * g.ys.size(), 0.0);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t iy = next++; iy < g.ys.size(); iy = next++) {
      for (std::size_t ix = 0; ix < g.xs.size(); ++ix) {
        const ParamVector p = plane_point(proj, g.xs[ix], g.ys[iy]);
        g.loss[iy * g.xs.size() + ix] = mean_loss(widths, p, examples);
      }
    }
  };
  const int n = std::clamp(workers, 1, resolution);
  std::vector<std::future<void>> pool;
  for (int t = 1; t < n; ++t) pool.push_back(std::async(std::launch::async, work));
  work();
  for (auto& f : pool) f.get();
  return g;
}

}  // namespace lookaround::nn

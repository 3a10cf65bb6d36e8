#include "riskcap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "riskcap/errors.hpp"

namespace riskcap {

namespace {

struct SimpsonPanel {
  double a, b;
  double fa, fm, fb;
  double estimate;
};

SimpsonPanel make_panel(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  return {a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb)};
}

double simpson_recurse(const std::function<double(double)>& f, const SimpsonPanel& panel,
                       double tol, int depth) {
  const double m = 0.5 * (panel.a + panel.b);
  const SimpsonPanel left = make_panel(f, panel.a, m, panel.fa, panel.fm);
  const SimpsonPanel right = make_panel(f, m, panel.b, panel.fm, panel.fb);
  const double err = left.estimate + right.estimate - panel.estimate;
  if (std::fabs(err) <= 15.0 * tol) return left.estimate + right.estimate + err / 15.0;
  if (depth <= 0) {
    std::ostringstream msg;
    msg << "integrate: depth limit reached on subinterval [" << panel.a << ", " << panel.b << "]";
    throw NumericalError(msg.str());
  }
  return simpson_recurse(f, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureConfig& cfg) {
  if (!(a <= b)) throw std::invalid_argument("integrate: requires a <= b");
  if (a == b) return 0.0;
  const SimpsonPanel whole = make_panel(f, a, b, f(a), f(b));
  return simpson_recurse(f, whole, cfg.tolerance, cfg.max_depth);
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo <= hi)) throw std::invalid_argument("find_root: requires lo <= hi");
  double flo = f(lo);
  if (flo == 0.0) return lo;
  double fhi = f(hi);
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) {
    // Probe the midpoint before giving up; catches tangent roots such as
    // x^2 on [-1, 1] where both endpoints share a sign.
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if (flo * fmid < 0.0) {
      hi = mid;
      fhi = fmid;
    } else if (fmid * fhi < 0.0) {
      lo = mid;
      flo = fmid;
    } else {
      throw NumericalError("find_root: no sign change on bracket");
    }
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if ((flo < 0.0) != (fmid < 0.0)) {
      hi = mid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

enum class BoundKind { Free, Lower, Upper, Both };

struct Transform {
  BoundKind kind;
  double lo, hi;

  double to_x(double y) const {
    switch (kind) {
      case BoundKind::Free:
        return y;
      case BoundKind::Lower:
        return lo + y * y;
      case BoundKind::Upper:
        return hi - y * y;
      case BoundKind::Both:
      default:
        return lo + (hi - lo) * 0.5 * (1.0 + std::sin(y));
    }
  }

  double to_y(double x) const {
    switch (kind) {
      case BoundKind::Free:
        return x;
      case BoundKind::Lower:
        return std::sqrt(std::max(0.0, x - lo));
      case BoundKind::Upper:
        return std::sqrt(std::max(0.0, hi - x));
      case BoundKind::Both:
      default: {
        const double t = std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0);
        return std::asin(t);
      }
    }
  }

  double initial_step(double y0, double fraction) const {
    if (kind == BoundKind::Both) return fraction * 3.141592653589793;
    return fraction * std::max(1.0, std::fabs(y0));
  }
};

struct Vertex {
  std::vector<double> y;
  double f;
};

}  // namespace

MinimizeResult minimize(const std::function<double(const std::vector<double>&)>& f,
                        const std::vector<double>& x0, const std::vector<double>& lower,
                        const std::vector<double>& upper, const SimplexConfig& cfg) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("minimize: empty starting point");
  if (!lower.empty() && lower.size() != n)
    throw std::invalid_argument("minimize: lower bound size mismatch");
  if (!upper.empty() && upper.size() != n)
    throw std::invalid_argument("minimize: upper bound size mismatch");

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Transform> tr(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = lower.empty() ? -inf : lower[k];
    const double hi = upper.empty() ? inf : upper[k];
    if (lo > hi) throw std::invalid_argument("minimize: lower bound exceeds upper bound");
    const bool has_lo = std::isfinite(lo);
    const bool has_hi = std::isfinite(hi);
    tr[k].kind = has_lo ? (has_hi ? BoundKind::Both : BoundKind::Lower)
                        : (has_hi ? BoundKind::Upper : BoundKind::Free);
    tr[k].lo = lo;
    tr[k].hi = hi;
  }

  MinimizeResult result;
  auto eval = [&](const std::vector<double>& y) {
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = tr[k].to_x(y[k]);
    ++result.evaluations;
    return f(x);
  };

  std::vector<double> best_y(n);
  for (std::size_t k = 0; k < n; ++k) best_y[k] = tr[k].to_y(x0[k]);
  double best_f = eval(best_y);

  for (int run = 0; run <= cfg.restarts; ++run) {
    const double step_scale = std::ldexp(cfg.initial_step, -run);
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({best_y, best_f});
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> y = best_y;
      double h = tr[k].initial_step(y[k], step_scale);
      if (h == 0.0) h = step_scale;
      y[k] += h;
      simplex.push_back({y, eval(y)});
    }

    auto order = [&] {
      std::stable_sort(simplex.begin(), simplex.end(),
                       [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    order();

    bool converged = false;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
      if (simplex.back().f - simplex.front().f <= cfg.tolerance) {
        converged = true;
        break;
      }
      ++result.iterations;

      std::vector<double> centroid(n, 0.0);
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v].y[k];
      for (std::size_t k = 0; k < n; ++k) centroid[k] /= static_cast<double>(n);

      const Vertex& worst = simplex.back();
      auto along = [&](double coef) {
        std::vector<double> y(n);
        for (std::size_t k = 0; k < n; ++k) y[k] = centroid[k] + coef * (centroid[k] - worst.y[k]);
        return y;
      };

      std::vector<double> yr = along(1.0);
      const double fr = eval(yr);
      if (fr < simplex.front().f) {
        std::vector<double> ye = along(2.0);
        const double fe = eval(ye);
        if (fe < fr) {
          simplex.back() = {std::move(ye), fe};
        } else {
          simplex.back() = {std::move(yr), fr};
        }
      } else if (fr < simplex[n - 1].f) {
        simplex.back() = {std::move(yr), fr};
      } else if (fr < worst.f) {
        std::vector<double> yc = along(0.5);
        const double fc = eval(yc);
        if (fc <= fr) {
          simplex.back() = {std::move(yc), fc};
        } else {
          for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t k = 0; k < n; ++k)
              simplex[v].y[k] = simplex[0].y[k] + 0.5 * (simplex[v].y[k] - simplex[0].y[k]);
            simplex[v].f = eval(simplex[v].y);
          }
        }
      } else {
        std::vector<double> yc = along(-0.5);
        const double fc = eval(yc);
        if (fc < worst.f) {
          simplex.back() = {std::move(yc), fc};
        } else {
          for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t k = 0; k < n; ++k)
              simplex[v].y[k] = simplex[0].y[k] + 0.5 * (simplex[v].y[k] - simplex[0].y[k]);
            simplex[v].f = eval(simplex[v].y);
          }
        }
      }
      order();
    }

    if (simplex.front().f < best_f) {
      best_f = simplex.front().f;
      best_y = simplex.front().y;
    }
    result.converged = converged;
    result.restarts_used = run;
  }

  result.x.resize(n);
  for (std::size_t k = 0; k < n; ++k) result.x[k] = tr[k].to_x(best_y[k]);
  result.value = best_f;
  return result;
}

}  // namespace riskcap

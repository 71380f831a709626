#include "sphpursuit/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace sphpursuit {

Box::Box(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<bool> wrap)
    : lo(std::move(lower)), hi(std::move(upper)), periodic(std::move(wrap)) {
  if (lo.size() != hi.size() || lo.size() == 0) throw std::invalid_argument("box bounds must have equal nonzero length");
  if (periodic.empty()) periodic.assign(static_cast<std::size_t>(lo.size()), false);
  if (periodic.size() != static_cast<std::size_t>(lo.size())) throw std::invalid_argument("periodic flags length");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("empty box");
}

bool Box::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  return true;
}

Eigen::VectorXd Box::project(const Eigen::VectorXd& x) const {
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = hi[i] - lo[i];
    if (periodic[static_cast<std::size_t>(i)] && w > 0.0) {
      p[i] = lo[i] + std::fmod(p[i] - lo[i], w);
      if (p[i] < lo[i]) p[i] += w;
    }
    p[i] = std::clamp(p[i], lo[i], hi[i]);
  }
  return p;
}

namespace {

struct Rect {
  Eigen::VectorXd center;  // unit-cube coordinates
  std::vector<int> level;  // side length 3^-level per coordinate
  double value;            // minimized quantity (-f)
  double size;             // half diagonal
};

double rect_size(const std::vector<int>& level) {
  double s = 0.0;
  for (int l : level) s += std::pow(9.0, -l);
  return 0.5 * std::sqrt(s);
}

}  // namespace

OptimizeResult global_maximize(const ScalarFn& f, const Box& box, const GlobalBudget& budget) {
  if (budget.max_evaluations < 1) throw std::invalid_argument("global budget must be positive");
  const Eigen::Index n = box.dim();
  const auto t0 = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > budget.max_seconds;
  };
  const Eigen::VectorXd width = box.hi - box.lo;
  OptimizeResult res;
  auto eval = [&](const Eigen::VectorXd& u) {
    Eigen::VectorXd x = box.lo + width.cwiseProduct(u);
    x = x.cwiseMax(box.lo).cwiseMin(box.hi);
    const double v = f(x);
    ++res.evaluations;
    const double m = std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    if (res.evaluations == 1 || -m > res.value) {
      res.value = -m;
      res.x = x;
    }
    return m;
  };

  std::vector<Rect> rects;
  {
    Rect r{Eigen::VectorXd::Constant(n, 0.5), std::vector<int>(static_cast<std::size_t>(n), 0), 0.0, 0.0};
    r.value = eval(r.center);
    r.size = rect_size(r.level);
    rects.push_back(std::move(r));
  }
  constexpr double kEps = 1e-4;
  auto budget_left = [&] { return res.evaluations < budget.max_evaluations && !out_of_time(); };

  while (budget_left()) {
    // Best rectangle per size class (lowest index on ties).
    std::map<double, std::size_t> best_of_size;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      auto it = best_of_size.find(rects[i].size);
      if (it == best_of_size.end() || rects[i].value < rects[it->second].value) best_of_size[rects[i].size] = i;
    }
    std::vector<std::size_t> cand;
    for (const auto& kv : best_of_size) cand.push_back(kv.second);  // ascending size
    const double fmin = -res.value;
    // Lower-right convex hull over (size, value), starting at the best value.
    std::size_t start = 0;
    for (std::size_t i = 1; i < cand.size(); ++i)
      if (rects[cand[i]].value <= rects[cand[start]].value) start = i;
    std::vector<std::size_t> hull;
    for (std::size_t i = start; i < cand.size(); ++i) {
      const Rect& r = rects[cand[i]];
      while (hull.size() >= 2) {
        const Rect& a = rects[hull[hull.size() - 2]];
        const Rect& b = rects[hull.back()];
        const double cross = (b.size - a.size) * (r.value - a.value) - (b.value - a.value) * (r.size - a.size);
        if (cross <= 0.0) hull.pop_back();
        else break;
      }
      hull.push_back(cand[i]);
    }
    // Sufficient-decrease filter: drop hull members whose best attainable
    // slope cannot improve on fmin by a relative epsilon.
    std::vector<std::size_t> selected;
    for (std::size_t h = 0; h < hull.size(); ++h) {
      const Rect& r = rects[hull[h]];
      if (h + 1 < hull.size()) {
        const Rect& next = rects[hull[h + 1]];
        const double slope = (next.value - r.value) / (next.size - r.size);
        if (r.value - slope * r.size > fmin - kEps * std::abs(fmin)) continue;
      }
      selected.push_back(hull[h]);
    }
    if (selected.empty()) selected.push_back(hull.back());

    bool divided = false;
    for (std::size_t idx : selected) {
      if (!budget_left()) break;
      Rect base = rects[idx];
      const int lmin = *std::min_element(base.level.begin(), base.level.end());
      std::vector<Eigen::Index> dims;
      for (Eigen::Index d = 0; d < n; ++d)
        if (base.level[static_cast<std::size_t>(d)] == lmin) dims.push_back(d);
      const double delta = std::pow(3.0, -lmin) / 3.0;
      struct Probe {
        Eigen::Index dim;
        double lo_val, hi_val;
      };
      std::vector<Probe> probes;
      for (Eigen::Index d : dims) {
        if (res.evaluations + 2 > budget.max_evaluations || out_of_time()) break;
        Eigen::VectorXd cl = base.center, ch = base.center;
        cl[d] -= delta;
        ch[d] += delta;
        probes.push_back({d, eval(cl), eval(ch)});
      }
      std::stable_sort(probes.begin(), probes.end(), [](const Probe& a, const Probe& b) {
        return std::min(a.lo_val, a.hi_val) < std::min(b.lo_val, b.hi_val);
      });
      // Trisect in order of the best probe; later cuts act on the centre piece.
      divided = divided || !probes.empty();
      for (const Probe& p : probes) {
        base.level[static_cast<std::size_t>(p.dim)] += 1;
        const double sz = rect_size(base.level);
        Rect lo_r = base, hi_r = base;
        lo_r.center[p.dim] -= delta;
        hi_r.center[p.dim] += delta;
        lo_r.value = p.lo_val;
        hi_r.value = p.hi_val;
        lo_r.size = hi_r.size = sz;
        rects.push_back(std::move(lo_r));
        rects.push_back(std::move(hi_r));
      }
      base.size = rect_size(base.level);
      rects[idx] = std::move(base);
    }
    if (!divided) break;  // the remaining budget cannot pay for a division
  }
  res.budget_exhausted = true;
  return res;
}

Eigen::VectorXd fd_gradient(const ScalarFn& f, const Box& box, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool wrap = box.periodic[static_cast<std::size_t>(i)];
    Eigen::VectorXd xp = x, xm = x;
    xp[i] = wrap ? x[i] + h : std::min(x[i] + h, box.hi[i]);
    xm[i] = wrap ? x[i] - h : std::max(x[i] - h, box.lo[i]);
    const double span = xp[i] - xm[i];
    g[i] = span > 0.0 ? (f(box.project(xp)) - f(box.project(xm))) / span : 0.0;
  }
  return g;
}

OptimizeResult local_maximize(const ValueGradFn& f, const Box& box, const Eigen::VectorXd& start,
                              const LocalOptions& opt) {
  if (!box.contains(start)) throw std::invalid_argument("local start outside the box");
  OptimizeResult res;
  const ScalarFn value_only = [&](const Eigen::VectorXd& z) {
    ++res.evaluations;
    return f(z, nullptr);
  };
  auto value_grad = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
    ++res.evaluations;
    double v;
    try {
      v = f(z, &g);
      if (g.size() == z.size() && g.allFinite()) return v;
    } catch (const std::exception&) {
      v = value_only(z);
    }
    g = fd_gradient(value_only, box, z, opt.fd_step);
    return v;
  };

  Eigen::VectorXd x = start, g;
  double fx = value_grad(x, g);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    return res;
  }
  double step = 1.0 / std::max(g.norm(), 1e-300) * 1e-2 * (box.hi - box.lo).norm();
  Eigen::VectorXd x_prev, g_prev;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (x_prev.size()) {
      const Eigen::VectorXd s = x - x_prev, yv = g - g_prev;
      const double sy = s.dot(yv);
      // Ascent: BB step from the curvature of -f.
      if (sy < 0.0) step = -s.squaredNorm() / sy;
      else step *= 2.0;
    }
    bool accepted = false;
    Eigen::VectorXd xn, gn;
    double fn = fx;
    for (int bt = 0; bt < 40; ++bt) {
      xn = box.project(x + step * g);
      const Eigen::VectorXd dx = xn - x;
      if (dx.norm() < opt.xtol) break;
      fn = value_grad(xn, gn);
      if (std::isfinite(fn) && fn >= fx + 1e-4 * g.dot(dx) && fn >= fx) {
        accepted = true;
        break;
      }
      step *= 0.25;
    }
    if (!accepted) break;
    const double df = fn - fx;
    const double dxn = (xn - x).norm();
    x_prev = x;
    g_prev = g;
    x = xn;
    g = gn;
    fx = fn;
    if (df < opt.ftol || dxn < opt.xtol) break;
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace sphpursuit

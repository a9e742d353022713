#include "loctime/singular_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "loctime/errors.hpp"
#include "loctime/quadrature.hpp"

namespace loctime {

double Tolerance::bound(double value) const { return std::max(abs, rel * std::abs(value)); }

namespace {

constexpr int kMaxBisection = 14;
constexpr int kMaxGeometricPanels = 400;

// Adaptive panel rule: Gauss-Legendre 32 with the 16-point rule as error
// estimate, bisecting until the panel's share of the budget is met.
class PanelIntegrator {
 public:
  PanelIntegrator(const std::function<double(double)>& f, Tolerance tol) : f_(f), tol_(tol) {}

  Integral1D integrate(double lo, double hi, int depth = 0) const {
    const auto& g16 = gauss_legendre(16);
    const auto& g32 = gauss_legendre(32);
    const double q16 = gauss_apply(g16, f_, lo, hi);
    const double q32 = gauss_apply(g32, f_, lo, hi);
    const double diff = std::abs(q32 - q16);
    const double target = 0.5 * tol_.abs * (hi - lo) + 0.5 * tol_.rel * std::abs(q32);
    if (diff <= target || depth >= kMaxBisection || !std::isfinite(diff)) return {q32, diff, 48};
    const double mid = 0.5 * (lo + hi);
    Integral1D out = integrate(lo, mid, depth + 1);
    out += integrate(mid, hi, depth + 1);
    out.evaluations += 48;
    return out;
  }

 private:
  const std::function<double(double)>& f_;
  Tolerance tol_;
};

std::vector<double> sorted_breaks(std::span<const double> raw) {
  std::vector<double> out;
  for (double b : raw)
    if (b > 0.0 && b < 1.0) out.push_back(b);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Integrates over [lo, hi], split at the breakpoints inside it.
Integral1D integrate_split(const PanelIntegrator& pi, double lo, double hi, const std::vector<double>& breaks) {
  Integral1D out;
  double a = lo;
  for (double b : breaks) {
    if (b <= lo || b >= hi) continue;
    out += pi.integrate(a, b);
    a = b;
  }
  out += pi.integrate(a, hi);
  return out;
}

std::vector<double> tau_breakpoints(const std::vector<double>& cuts) {
  std::vector<double> raw;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    raw.push_back(cuts[i]);
    raw.push_back(1.0 - cuts[i]);
    for (std::size_t j = 0; j < i; ++j) raw.push_back(std::abs(cuts[i] - cuts[j]));
  }
  return sorted_breaks(raw);
}

// G(tau) = int_0^{1-tau} g(t1, t1 + tau) dt1.
class InnerIntegral {
 public:
  InnerIntegral(const SingularIntegrandSpec& spec, std::vector<double> cuts)
      : g_(spec.g), local_(spec.g_local), cuts_(std::move(cuts)) {
    const double amplification = spec.alpha < 1.0 ? 1.0 / (1.0 - spec.alpha) : 1.0;
    inner_tol_ = 0.1 * spec.tol.abs / amplification;
    inner_rel_ = 0.1 * spec.tol.rel;
  }

  double operator()(double tau) const {
    const double len = 1.0 - tau;
    if (len <= 0.0) return 0.0;
    auto h = [&](double t1) { return g_(t1, t1 + tau); };
    if (cuts_.empty() && local_) {
      auto exact = [&](double t1) { return local_(t1, tau, {}, {}); };
      return smooth(exact, 0.0, len, 0);
    }
    if (cuts_.empty()) return smooth(h, 0.0, len, 0);
    if (local_) {
      const Integral1D r = integrate_local(tau, len);
      evaluations_ += r.evaluations;
      max_error_ = std::max(max_error_, r.error);
      return r.value;
    }
    std::vector<double> pieces;
    for (double c : cuts_) {
      pieces.push_back(c);
      pieces.push_back(c - tau);
    }
    const Integral1D r = integrate_pieces(h, 0.0, len, std::max(inner_tol_, 1e-300), pieces);
    evaluations_ += r.evaluations;
    max_error_ = std::max(max_error_, r.error);
    return r.value;
  }

  std::size_t evaluations() const { return evaluations_; }
  double max_error() const { return max_error_; }

 private:
  template <typename H>
  double smooth(const H& h, double lo, double hi, int depth) const {
    const double q16 = gauss_apply(gauss_legendre(16), h, lo, hi);
    const double q32 = gauss_apply(gauss_legendre(32), h, lo, hi);
    evaluations_ += 48;
    const double diff = std::abs(q32 - q16);
    const double target = inner_tol_ * (hi - lo) + inner_rel_ * std::abs(q32);
    if (diff <= target || depth >= 10 || !std::isfinite(diff)) {
      max_error_ = std::max(max_error_, diff);
      return q32;
    }
    const double mid = 0.5 * (lo + hi);
    return smooth(h, lo, mid, depth + 1) + smooth(h, mid, hi, depth + 1);
  }

  // A piece end and, for each cut it was placed against, the offsets
  // t1 - c and t1 + tau - c there. Offsets are exact where positions are not:
  // c - tau may round onto c when tau is tiny.
  struct Anchor {
    std::size_t cut;
    double d1, d2;
  };
  struct End {
    double position;
    std::vector<Anchor> anchors;
  };

  static const Anchor* find(const End& e, std::size_t cut) {
    for (const Anchor& a : e.anchors)
      if (a.cut == cut) return &a;
    return nullptr;
  }

  static double width(const End& a, const End& b) {
    for (const Anchor& x : a.anchors)
      if (const Anchor* y = find(b, x.cut)) return y->d1 - x.d1;
    return b.position - a.position;
  }

  static End shifted(const End& e, double step) {
    End out{e.position + step, e.anchors};
    for (Anchor& a : out.anchors) {
      a.d1 += step;
      a.d2 += step;
    }
    return out;
  }

  std::vector<End> piece_ends(double tau, double len) const {
    std::vector<End> raw{{0.0, {}}, {len, {}}};
    for (std::size_t j = 0; j < cuts_.size(); ++j) {
      const double c = cuts_[j];
      if (c - tau >= 0.0 && c - tau <= len) raw.push_back({c - tau, {{j, -tau, 0.0}}});
      if (c <= len) raw.push_back({c, {{j, 0.0, tau}}});
    }
    std::stable_sort(raw.begin(), raw.end(), [](const End& a, const End& b) {
      if (a.position != b.position) return a.position < b.position;
      if (a.anchors.size() == 1 && b.anchors.size() == 1 && a.anchors[0].cut == b.anchors[0].cut)
        return a.anchors[0].d1 < b.anchors[0].d1;
      return false;
    });
    // Ends at one position merge unless they are distinct ends for one cut.
    std::vector<End> ends;
    for (End& e : raw) {
      if (!ends.empty() && ends.back().position == e.position &&
          std::none_of(e.anchors.begin(), e.anchors.end(), [&](const Anchor& a) { return find(ends.back(), a.cut); })) {
        ends.back().anchors.insert(ends.back().anchors.end(), e.anchors.begin(), e.anchors.end());
        continue;
      }
      ends.push_back(std::move(e));
    }
    // Grade geometrically away from a small neighbour, so features on the
    // scale of a narrow piece are resolved in the wide one next to it.
    std::vector<double> w;
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) w.push_back(width(ends[i], ends[i + 1]));
    std::vector<End> graded;
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
      graded.push_back(ends[i]);
      if (!(w[i] > 0.0)) continue;
      std::vector<End> right;
      if (i > 0 && !ends[i].anchors.empty() && w[i - 1] > 0.0)
        for (double step = 8.0 * w[i - 1]; step <= 0.25 * w[i]; step *= 8.0) graded.push_back(shifted(ends[i], step));
      if (i + 2 < ends.size() && !ends[i + 1].anchors.empty() && w[i + 1] > 0.0)
        for (double step = 8.0 * w[i + 1]; step <= 0.25 * w[i]; step *= 8.0) right.push_back(shifted(ends[i + 1], -step));
      graded.insert(graded.end(), right.rbegin(), right.rend());
    }
    graded.push_back(ends.back());
    return graded;
  }

  Integral1D integrate_local(double tau, double len) const {
    const std::vector<End> ends = piece_ends(tau, len);
    const std::size_t n = cuts_.size();
    std::vector<double> d1(n), d2(n);
    Integral1D total;
    double l1 = 0.0;
    for (std::size_t i = 0; i + 1 < ends.size(); ++i) {
      const End& lo = ends[i];
      const End& hi = ends[i + 1];
      const double w = width(lo, hi);
      if (!(w > 0.0)) continue;
      auto f = [&](const PieceNode& node) {
        const bool near_lo = node.from_lo <= node.from_hi;
        const double base = near_lo ? lo.position : hi.position;
        const double delta = near_lo ? node.from_lo : -node.from_hi;
        const double x = base + delta;
        // base - c is exact when the two are close; adding delta last keeps it.
        for (std::size_t j = 0; j < n; ++j) {
          d1[j] = (base - cuts_[j]) + delta;
          d2[j] = ((base - cuts_[j]) + tau) + delta;
        }
        // Far end first so the nearer end's offsets win.
        auto apply = [&](const End& e, double delta) {
          for (const Anchor& a : e.anchors) {
            d1[a.cut] = a.d1 + delta;
            d2[a.cut] = a.d2 + delta;
          }
        };
        if (near_lo) {
          apply(hi, -node.from_hi);
          apply(lo, node.from_lo);
        } else {
          apply(lo, node.from_lo);
          apply(hi, -node.from_hi);
        }
        return local_(x, tau, d1, d2);
      };
      double piece_l1 = 0.0;
      total += integrate_piece_local(f, w, piece_l1);
      l1 += piece_l1;
    }
    require_accuracy(total, l1, 0.0, len, std::max(inner_tol_, 1e-300));
    return total;
  }

  const TriangleIntegrand& g_;
  const std::function<double(double, double, std::span<const double>, std::span<const double>)>& local_;
  std::vector<double> cuts_;
  double inner_tol_ = 0.0;
  double inner_rel_ = 0.0;
  mutable std::size_t evaluations_ = 0;
  mutable double max_error_ = 0.0;
};

}  // namespace

double triangle_power_moment(double alpha) {
  if (!(alpha < 1.0)) {
    std::ostringstream msg;
    msg << "tau^(-alpha) is not integrable on the simplex for alpha = " << alpha << " (need alpha < 1)";
    throw NonIntegrableError(msg.str());
  }
  return 1.0 / ((1.0 - alpha) * (2.0 - alpha));
}

QuadratureResult integrate_power_singular(const std::function<double(double)>& G, double alpha, Tolerance tol,
                                          std::span<const double> tau_breaks) {
  if (!(alpha < 1.0)) {
    std::ostringstream msg;
    msg << "tau^(-alpha) is not integrable at tau = 0 for alpha = " << alpha << " (need alpha < 1)";
    throw NonIntegrableError(msg.str());
  }
  if (!(tol.abs > 0.0) && !(tol.rel > 0.0)) throw ValidationError("quadrature tolerance must be positive");
  const std::vector<double> breaks = sorted_breaks(tau_breaks);
  const double min_break = breaks.empty() ? 1.0 : breaks.front();

  const std::function<double(double)> weighted = [&](double tau) { return std::pow(tau, -alpha) * G(tau); };
  const PanelIntegrator panels(weighted, tol);
  const double p = 1.0 - alpha;

  // int_0^lo tau^(-alpha) G = lo^p / p * int_0^1 G(lo v^(1/p)) dv.
  auto remainder = [&](double lo) -> Integral1D {
    auto h = [&](double v) { return G(lo * std::pow(v, 1.0 / p)); };
    const double q16 = gauss_apply(gauss_legendre(16), h, 0.0, 1.0);
    const double q32 = gauss_apply(gauss_legendre(32), h, 0.0, 1.0);
    const double scale = std::pow(lo, p) / p;
    return {scale * q32, scale * std::abs(q32 - q16), 48};
  };

  Integral1D body;
  double prev_estimate = 0.0, prev_step = 0.0;
  bool have_prev = false, have_prev_step = false;
  double best = 0.0, best_err = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kMaxGeometricPanels; ++k) {
    const double hi = std::ldexp(1.0, -k);
    const double lo = std::ldexp(1.0, -k - 1);
    body += integrate_split(panels, lo, hi, breaks);
    const Integral1D rem = remainder(lo);
    const double estimate = body.value + rem.value;
    const std::size_t evals = body.evaluations + rem.evaluations;
    if (lo >= min_break) {
      prev_estimate = estimate;
      have_prev = true;
      continue;
    }
    double tail_err = std::numeric_limits<double>::infinity();
    if (have_prev) {
      const double step = std::abs(estimate - prev_estimate);
      if (step <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(estimate) + 1e-300) {
        tail_err = step;
      } else if (have_prev_step && prev_step > 0.0) {
        const double r = step / prev_step;
        if (r < 0.95) tail_err = step * r / (1.0 - r);
      }
      prev_step = step;
      have_prev_step = true;
    }
    const double err = body.error + rem.error + tail_err;
    if (err < best_err) {
      best = estimate;
      best_err = err;
    }
    if (err <= tol.bound(estimate)) return {estimate, err, evals};
    prev_estimate = estimate;
    have_prev = true;
  }
  std::ostringstream msg;
  msg << "singular quadrature did not reach tolerance " << tol.abs << " (best error estimate " << best_err << ")";
  throw AccuracyError(msg.str(), best, best_err);
}

QuadratureResult integrate_triangle_singular(const SingularIntegrandSpec& spec) {
  if (!spec.g && !spec.g_local) throw ValidationError("triangle integrand is empty");
  if (!spec.integrable()) {
    std::ostringstream msg;
    msg << "integrand tau^(-" << spec.alpha << ") g is not integrable on the simplex (need alpha < 1)";
    throw NonIntegrableError(msg.str());
  }
  const std::vector<double> cuts = sorted_breaks(spec.breakpoints);
  const InnerIntegral inner(spec, cuts);
  const std::vector<double> tau_breaks = tau_breakpoints(cuts);
  Tolerance outer = spec.tol;
  outer.abs *= 0.8;
  outer.rel *= 0.8;
  QuadratureResult r = integrate_power_singular(std::cref(inner), spec.alpha, outer, tau_breaks);
  r.error_estimate += inner.max_error() / (1.0 - spec.alpha);
  r.evaluations = inner.evaluations();
  return r;
}

std::vector<ProbePoint> divergence_probe(const SingularIntegrandSpec& spec, std::span<const double> cutoffs) {
  if (!spec.g && !spec.g_local) throw ValidationError("triangle integrand is empty");
  std::vector<double> kappas(cutoffs.begin(), cutoffs.end());
  for (double k : kappas)
    if (!(k > 0.0 && k < 1.0)) throw ValidationError("divergence probe cutoffs must lie in (0, 1)");
  std::sort(kappas.begin(), kappas.end(), std::greater<>());

  const std::vector<double> cuts = sorted_breaks(spec.breakpoints);
  SingularIntegrandSpec inner_spec = spec;
  inner_spec.alpha = std::min(spec.alpha, 0.0);
  const InnerIntegral inner(inner_spec, cuts);
  std::vector<double> breaks = tau_breakpoints(cuts);
  breaks.insert(breaks.end(), kappas.begin(), kappas.end());
  breaks = sorted_breaks(breaks);

  const std::function<double(double)> weighted = [&](double tau) { return std::pow(tau, -spec.alpha) * inner(tau); };
  const PanelIntegrator panels(weighted, spec.tol);

  std::vector<ProbePoint> out;
  double accumulated = 0.0;
  double hi = 1.0;
  for (double kappa : kappas) {
    // Geometric panels from hi down to kappa.
    while (hi > kappa) {
      const double lo = std::max(kappa, 0.5 * hi);
      accumulated += integrate_split(panels, lo, hi, breaks).value;
      hi = lo;
    }
    out.push_back({kappa, accumulated});
  }
  return out;
}

}  // namespace loctime

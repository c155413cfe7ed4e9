#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spde/errors.hpp"
#include "spde/field.hpp"
#include "spde/grid.hpp"

namespace spde {

inline double sup_norm(const SpaceTimeField& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

/// Sup over the closed time band [t_lo, t_hi] inside the field's window.
inline double sup_norm(const SpaceTimeField& f, double t_lo, double t_hi) {
  const SpaceTimeGrid& g = f.grid;
  const double t1 = g.t0 + 1.0;
  if (t_lo < g.t0 - 1e-12 || t_hi > t1 + 1e-12 || t_lo > t_hi)
    throw ValidationError("sup_norm: requested band outside the field window");
  const int l_lo = static_cast<int>(std::ceil((t_lo - g.t0) / g.dt - 1e-9));
  const int l_hi = static_cast<int>(std::floor((t_hi - g.t0) / g.dt + 1e-9));
  double m = 0.0;
  for (int l = l_lo; l <= l_hi; ++l) {
    const double* lv = f.level_data(l);
    for (long i = 0; i < f.level_stride(); ++i) m = std::max(m, std::abs(lv[i]));
  }
  return m;
}

/// Dyadic oscillation profile: gamma[n] is the largest (max - min) of the
/// field over any closed cube of side 2^{-n} in the space-time cylinder,
/// evaluated on grid nodes.  Built bottom-up: closed child cubes tile
/// their parent, so a parent's extrema are the extrema of its 2^{d+1}
/// children.
struct OscProfile {
  int n_max = 0;
  std::vector<double> gamma;  // index n = 0..n_max

  /// Increment bound for a displacement of magnitude delta in the sum/max
  /// metric: two points at distance <= 2^{-n} lie in one closed cube (or
  /// two adjacent ones) of side 2^{-n}, so their values differ by at most
  /// 2 gamma[n] with n = floor(log2(1/delta)).
  double increment_bound(double delta) const {
    if (!(delta > 0.0) || delta > 1.0)
      throw ValidationError("increment bound: displacement must lie in (0, 1]");
    const int level = static_cast<int>(std::floor(std::log2(1.0 / delta) + 1e-9));
    if (level > n_max) {
      std::ostringstream os;
      os << "increment bound: displacement " << delta << " needs oscillation level " << level
         << " but the profile stops at " << n_max;
      throw ValidationError(os.str());
    }
    return 2.0 * gamma[static_cast<size_t>(level)];
  }
};

inline OscProfile osc_profile(const SpaceTimeField& f, int n_max = -1) {
  const SpaceTimeGrid& g = f.grid;
  const int lx = log2_exact(g.nx - 1);
  const int lt = log2_exact(g.steps_per_unit());
  if (lx < 0 || lt < 0)
    throw ValidationError("oscillation profile: grid is not dyadic (nx-1, 1/dt powers of two)");
  const int n_avail = std::min(lx, lt);
  if (n_max < 0) n_max = n_avail;
  if (n_max > n_avail)
    throw ValidationError("oscillation profile: level too fine for the grid resolution");

  OscProfile prof;
  prof.n_max = n_max;
  prof.gamma.assign(static_cast<size_t>(n_max) + 1, 0.0);

  const int n = n_max;
  const long cx = 1L << n;                       // cubes per spatial axis
  const long cy = (g.d == 2) ? (1L << n) : 1L;   // cubes per second axis
  const long ct = 1L << n;                       // cubes along time
  const int span_x = (g.nx - 1) >> n;            // grid intervals per cube side
  const int span_t = g.steps_per_unit() >> n;
  std::vector<double> cmin(static_cast<size_t>(cx * cy * ct), 1e300);
  std::vector<double> cmax(static_cast<size_t>(cx * cy * ct), -1e300);
  auto cube_at = [&](long kx, long ky, long kt) { return static_cast<size_t>((kt * cy + ky) * cx + kx); };

  for (long kt = 0; kt < ct; ++kt)
    for (long ky = 0; ky < cy; ++ky)
      for (long kx = 0; kx < cx; ++kx) {
        double lo = 1e300, hi = -1e300;
        for (int l = static_cast<int>(kt) * span_t; l <= static_cast<int>(kt + 1) * span_t; ++l) {
          const double* lv = f.level_data(l);
          const int iy0 = (g.d == 2) ? static_cast<int>(ky) * span_x : 0;
          const int iy1 = (g.d == 2) ? static_cast<int>(ky + 1) * span_x : 0;
          for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = static_cast<int>(kx) * span_x; ix <= static_cast<int>(kx + 1) * span_x;
                 ++ix) {
              const double v = lv[static_cast<size_t>(g.spatial_index(ix, iy))];
              lo = std::min(lo, v);
              hi = std::max(hi, v);
            }
        }
        cmin[cube_at(kx, ky, kt)] = lo;
        cmax[cube_at(kx, ky, kt)] = hi;
        prof.gamma[static_cast<size_t>(n)] = std::max(prof.gamma[static_cast<size_t>(n)], hi - lo);
      }

  // merge children upward
  std::vector<double> pmin, pmax;
  long px = cx, py = cy, pt = ct;
  std::vector<double>* cur_min = &cmin;
  std::vector<double>* cur_max = &cmax;
  std::vector<double> alt_min, alt_max;
  for (int level = n - 1; level >= 0; --level) {
    const long qx = px / 2, qy = std::max(py / 2, 1L), qt = pt / 2;
    alt_min.assign(static_cast<size_t>(qx * qy * qt), 1e300);
    alt_max.assign(static_cast<size_t>(qx * qy * qt), -1e300);
    for (long kt = 0; kt < pt; ++kt)
      for (long ky = 0; ky < py; ++ky)
        for (long kx = 0; kx < px; ++kx) {
          const size_t child = static_cast<size_t>((kt * py + ky) * px + kx);
          const size_t parent =
              static_cast<size_t>(((kt / 2) * qy + (g.d == 2 ? ky / 2 : 0)) * qx + kx / 2);
          alt_min[parent] = std::min(alt_min[parent], (*cur_min)[child]);
          alt_max[parent] = std::max(alt_max[parent], (*cur_max)[child]);
        }
    std::swap(alt_min, pmin);
    std::swap(alt_max, pmax);
    cur_min = &pmin;
    cur_max = &pmax;
    px = qx;
    py = qy;
    pt = qt;
    double g_lvl = 0.0;
    for (size_t i = 0; i < cur_min->size(); ++i)
      g_lvl = std::max(g_lvl, (*cur_max)[i] - (*cur_min)[i]);
    prof.gamma[static_cast<size_t>(level)] = g_lvl;
  }
  return prof;
}

inline constexpr double kDefaultChainTheta = 1.0 / 3.0;
inline const double kDefaultChainQ = 0.8908987181403393;  // 2^{-1/6}

/// Exceedance scan of dyadic-neighbor increments: at each level n the
/// nodes k of the level-n mesh are compared against all max-norm-1
/// neighbors k+e, and an event fires when |u((k+e)2^{-n}) - u(k 2^{-n})|
/// reaches K q^n.  k_critical is the smallest threshold K at which some
/// event would still fire; absence of events telescopes dyadic expansions
/// into the sup bound K q/(1-q).
struct ChainScanReport {
  double K = 0.0;
  double q = 0.0;
  int n_max = 0;
  std::vector<long> exceedances;  // per level, index n-1
  long scanned = 0;               // total increments examined
  bool event_occurred = false;
  double k_critical = 0.0;
  double no_event_sup_bound = 0.0;  // K q/(1-q)
};

inline ChainScanReport chain_scan(const SpaceTimeField& f, double K, double q, int n_max = -1) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("chain scan: q must lie in (0,1)");
  if (!(K > 0.0)) throw ValidationError("chain scan: threshold K must be positive");
  const SpaceTimeGrid& g = f.grid;
  const int n_avail = max_dyadic_level(g);
  if (n_max < 0) n_max = n_avail;
  if (n_max > n_avail) throw ValidationError("chain scan: level too fine for the grid");

  ChainScanReport rep;
  rep.K = K;
  rep.q = q;
  rep.n_max = n_max;
  rep.exceedances.assign(static_cast<size_t>(n_max), 0);
  rep.no_event_sup_bound = K * q / (1.0 - q);

  const std::vector<std::array<int, 3>> offsets = neighbor_offsets(g.d);
  double qn = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    qn *= q;
    const long side = 1L << n;
    const int step_x = (g.nx - 1) >> n;      // grid strides of one mesh cell
    const int step_t = g.steps_per_unit() >> n;
    const long ny = (g.d == 2) ? side : 0;
    const double threshold = K * qn;
    for (long kt = 0; kt <= side; ++kt)
      for (long ky = 0; ky <= ny; ++ky)
        for (long kx = 0; kx <= side; ++kx) {
          const double base =
              f.at(static_cast<int>(kt) * step_t,
                   g.spatial_index(static_cast<int>(kx) * step_x, static_cast<int>(ky) * step_x));
          for (const std::array<int, 3>& e : offsets) {
            const long ex = kx + e[0];
            const long ey = ky + ((g.d == 2) ? e[1] : 0);
            const long et = kt + e[g.d];
            if (ex < 0 || ex > side || et < 0 || et > side) continue;
            if (g.d == 2 && (ey < 0 || ey > ny)) continue;
            const double other =
                f.at(static_cast<int>(et) * step_t,
                     g.spatial_index(static_cast<int>(ex) * step_x, static_cast<int>(ey) * step_x));
            const double xi = std::abs(other - base);
            ++rep.scanned;
            if (xi >= threshold) {
              ++rep.exceedances[static_cast<size_t>(n - 1)];
              rep.event_occurred = true;
            }
            rep.k_critical = std::max(rep.k_critical, xi / qn);
          }
        }
  }
  return rep;
}

/// Largest dyadic-neighbor increment per level n = 1..n_max (index n-1).
/// From these, the critical threshold for any ratio q is
/// max_n maxima[n-1] / q^n: events fire at (K, q) exactly when
/// K <= that value.
inline std::vector<double> chain_level_maxima(const SpaceTimeField& f, int n_max = -1) {
  const SpaceTimeGrid& g = f.grid;
  const int n_avail = max_dyadic_level(g);
  if (n_max < 0) n_max = n_avail;
  if (n_max > n_avail) throw ValidationError("chain scan: level too fine for the grid");
  std::vector<double> maxima(static_cast<size_t>(n_max), 0.0);
  const std::vector<std::array<int, 3>> offsets = neighbor_offsets(g.d);
  for (int n = 1; n <= n_max; ++n) {
    const long side = 1L << n;
    const int step_x = (g.nx - 1) >> n;
    const int step_t = g.steps_per_unit() >> n;
    const long ny = (g.d == 2) ? side : 0;
    double& level_max = maxima[static_cast<size_t>(n - 1)];
    for (long kt = 0; kt <= side; ++kt)
      for (long ky = 0; ky <= ny; ++ky)
        for (long kx = 0; kx <= side; ++kx) {
          const double base =
              f.at(static_cast<int>(kt) * step_t,
                   g.spatial_index(static_cast<int>(kx) * step_x, static_cast<int>(ky) * step_x));
          for (const std::array<int, 3>& e : offsets) {
            const long ex = kx + e[0];
            const long ey = ky + ((g.d == 2) ? e[1] : 0);
            const long et = kt + e[g.d];
            if (ex < 0 || ex > side || et < 0 || et > side) continue;
            if (g.d == 2 && (ey < 0 || ey > ny)) continue;
            const double other =
                f.at(static_cast<int>(et) * step_t,
                     g.spatial_index(static_cast<int>(ex) * step_x, static_cast<int>(ey) * step_x));
            level_max = std::max(level_max, std::abs(other - base));
          }
        }
  }
  return maxima;
}

/// Smallest event threshold for ratio q given per-level increment maxima.
inline double critical_threshold(const std::vector<double>& level_maxima, double q) {
  double k_crit = 0.0;
  double qn = 1.0;
  for (size_t n = 0; n < level_maxima.size(); ++n) {
    qn *= q;
    k_crit = std::max(k_crit, level_maxima[n] / qn);
  }
  return k_crit;
}

/// Result of a Hölder seminorm evaluation.  "brute" scans every node
/// pair and is exact; "dyadic-restricted" scans a dyadic sublattice
/// (exact on that lattice, a lower bound overall) and reports an
/// oscillation-profile certificate that upper-bounds the true seminorm.
struct SeminormResult {
  double theta = 0.0;
  double value = 0.0;
  std::string mode;
  double certificate = 0.0;
  int lattice_level = -1;  // only for dyadic-restricted
};

namespace detail {

struct ScanNodes {
  std::vector<int> sx, sy, st;  // integer coords in units of the quantum
  std::vector<double> v;
  double quantum = 0.0;  // smallest representable distance
  int max_index = 0;     // largest coordinate value
};

/// Shared pair scan: distances are exact integer multiples of the
/// quantum, so per-theta weights (s * quantum)^{-theta} come from a table
/// and the inner loop is branch-light.  Running maxima prune pairs whose
/// value gap cannot beat any current ratio.
inline void scan_pairs(const ScanNodes& nodes, std::span<const double> thetas,
                       std::vector<double>& out) {
  const size_t n = nodes.v.size();
  const size_t nt = thetas.size();
  const int max_s = 3 * nodes.max_index + 1;
  std::vector<std::vector<double>> w(nt);
  for (size_t q = 0; q < nt; ++q) {
    w[q].resize(static_cast<size_t>(max_s) + 1, 0.0);
    for (int s = 1; s <= max_s; ++s)
      w[q][static_cast<size_t>(s)] = std::pow(s * nodes.quantum, -thetas[q]);
  }
  out.assign(nt, 0.0);
  // prune threshold: a pair can only matter if |dv| * max_weight > some R
  auto recompute_gate = [&]() {
    double gate = 1e300;
    for (size_t q = 0; q < nt; ++q) gate = std::min(gate, out[q] / w[q][1]);
    return gate;
  };
  double gate = 0.0;
  const bool two_d = !nodes.sy.empty();
  for (size_t i = 0; i < n; ++i) {
    const double vi = nodes.v[i];
    const int xi = nodes.sx[i], ti = nodes.st[i];
    const int yi = two_d ? nodes.sy[i] : 0;
    for (size_t j = i + 1; j < n; ++j) {
      const double dv = std::abs(nodes.v[j] - vi);
      if (dv <= gate) continue;
      int dx = std::abs(nodes.sx[j] - xi);
      if (two_d) dx = std::max(dx, std::abs(nodes.sy[j] - yi));
      const int s = std::abs(nodes.st[j] - ti) + dx;
      bool improved = false;
      for (size_t q = 0; q < nt; ++q) {
        const double r = dv * w[q][static_cast<size_t>(s)];
        if (r > out[q]) {
          out[q] = r;
          improved = true;
        }
      }
      if (improved) gate = recompute_gate();
    }
  }
}

}  // namespace detail

/// Hölder seminorms of a window field in the sum/max space-time metric
/// dist = |t1-t2| + |x1-x2|_inf, for several exponents in one pass.
inline std::vector<SeminormResult> holder_seminorms(const SpaceTimeField& f,
                                                    std::span<const double> thetas,
                                                    long brute_node_limit = 20000,
                                                    long lattice_budget = 5000) {
  for (double th : thetas)
    if (th < 0.0 || th >= 1.0)
      throw ValidationError("holder seminorm: theta must lie in [0, 1)");
  const SpaceTimeGrid& g = f.grid;
  const int lx = log2_exact(g.nx - 1);
  const int lt = log2_exact(g.steps_per_unit());
  if (lx < 0 || lt < 0) throw ValidationError("holder seminorm: grid is not dyadic");
  const long total_nodes = static_cast<long>(f.grid.nodes());

  detail::ScanNodes nodes;
  std::vector<SeminormResult> results(thetas.size());
  const bool brute = total_nodes <= brute_node_limit;

  if (brute) {
    const int lmax = std::max(lx, lt);
    nodes.quantum = std::pow(0.5, lmax);
    nodes.max_index = 1 << lmax;
    const int fx = 1 << (lmax - lx), ft = 1 << (lmax - lt);
    const int ny = (g.d == 2) ? g.nx : 1;
    for (int l = 0; l <= g.steps_per_unit(); ++l)
      for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
          nodes.sx.push_back(ix * fx);
          if (g.d == 2) nodes.sy.push_back(iy * fx);
          nodes.st.push_back(l * ft);
          nodes.v.push_back(f.at(l, g.spatial_index(ix, iy)));
        }
  } else {
    // largest dyadic lattice level within the node budget and the grid
    int level = 1;
    while (true) {
      const long side = (1L << (level + 1)) + 1;
      long count = side * side;
      if (g.d == 2) count *= side;
      if (count > lattice_budget) break;
      ++level;
    }
    level = std::min(level, std::min(lx, lt));
    nodes.quantum = std::pow(0.5, level);
    nodes.max_index = 1 << level;
    const int step_x = (g.nx - 1) >> level;
    const int step_t = g.steps_per_unit() >> level;
    const long side = (1L << level) + 1;
    const long ny = (g.d == 2) ? side : 1;
    for (long kt = 0; kt < side; ++kt)
      for (long ky = 0; ky < ny; ++ky)
        for (long kx = 0; kx < side; ++kx) {
          nodes.sx.push_back(static_cast<int>(kx));
          if (g.d == 2) nodes.sy.push_back(static_cast<int>(ky));
          nodes.st.push_back(static_cast<int>(kt));
          nodes.v.push_back(f.at(static_cast<int>(kt) * step_t,
                                 g.spatial_index(static_cast<int>(kx) * step_x,
                                                 static_cast<int>(ky) * step_x)));
        }
    for (size_t q = 0; q < thetas.size(); ++q) results[q].lattice_level = log2_exact(nodes.max_index);
  }

  std::vector<double> scanned;
  detail::scan_pairs(nodes, thetas, scanned);

  if (brute) {
    for (size_t q = 0; q < thetas.size(); ++q) {
      results[q].theta = thetas[q];
      results[q].value = scanned[q];
      results[q].mode = "brute";
      results[q].certificate = scanned[q];  // scan was exhaustive
    }
    return results;
  }

  // oscillation-profile certificate: every pair with dist in
  // [2^{-(n+1)}, 2^{-n}) is covered by (at most two adjacent) level-n
  // cubes, so its ratio is at most 2 gamma_n * 2^{(n+1) theta}; sub-mesh
  // pairs fall back to gamma at the deepest level over the smallest
  // positive grid distance, and pairs with dist >= 1 to 2 gamma_0.
  const OscProfile prof = osc_profile(f);
  const double min_dist = std::pow(0.5, std::max(lx, lt));
  for (size_t q = 0; q < thetas.size(); ++q) {
    const double th = thetas[q];
    double cert = 2.0 * prof.gamma[0];
    for (int n = 0; n < prof.n_max; ++n)
      cert = std::max(cert, 2.0 * prof.gamma[static_cast<size_t>(n)] *
                                std::pow(2.0, (n + 1) * th));
    cert = std::max(cert, 2.0 * prof.gamma[static_cast<size_t>(prof.n_max)] *
                              std::pow(min_dist, -th));
    results[q].theta = th;
    results[q].value = scanned[q];
    results[q].mode = "dyadic-restricted";
    results[q].certificate = cert;
  }
  return results;
}

inline SeminormResult holder_seminorm(const SpaceTimeField& f, double theta,
                                      long brute_node_limit = 20000,
                                      long lattice_budget = 5000) {
  const double th[1] = {theta};
  return holder_seminorms(f, th, brute_node_limit, lattice_budget)[0];
}

struct HolderReport {
  double window_t0 = 0.0;
  double theta = 0.0;
  double sup = 0.0;
  double seminorm = 0.0;
  std::string seminorm_mode;
  double norm() const { return sup + seminorm; }
};

inline HolderReport holder_report(const SpaceTimeField& f, double theta) {
  HolderReport r;
  r.window_t0 = f.grid.t0;
  r.theta = theta;
  r.sup = sup_norm(f);
  const SeminormResult s = holder_seminorm(f, theta);
  r.seminorm = s.value;
  r.seminorm_mode = s.mode;
  return r;
}

/// Spatial-only Hölder seminorm (max-norm metric), brute force.
inline double spatial_holder_seminorm(const SpatialField& f, double theta) {
  const int nx = f.nx;
  const double h = 1.0 / (nx - 1);
  const long n_nodes = (f.d == 2) ? static_cast<long>(nx) * nx : nx;
  if (n_nodes > 20000)
    throw ValidationError("spatial holder seminorm: field too large for the pair scan");
  double best = 0.0;
  const int ny = (f.d == 2) ? nx : 1;
  for (int iy1 = 0; iy1 < ny; ++iy1)
    for (int ix1 = 0; ix1 < nx; ++ix1)
      for (int iy2 = iy1; iy2 < ny; ++iy2)
        for (int ix2 = (iy2 == iy1 ? ix1 + 1 : 0); ix2 < nx; ++ix2) {
          int dmax = std::abs(ix2 - ix1);
          if (f.d == 2) dmax = std::max(dmax, std::abs(iy2 - iy1));
          const double dv = std::abs(f.at(ix2, iy2) - f.at(ix1, iy1));
          best = std::max(best, dv * std::pow(dmax * h, -theta));
        }
  return best;
}

/// Discrete C^1 norm: sup norm plus the largest one-sided difference
/// quotient along any axis.
inline double spatial_c1_norm(const SpatialField& f) {
  const int nx = f.nx;
  const double h = 1.0 / (nx - 1);
  double grad = 0.0;
  if (f.d == 1) {
    for (int i = 0; i + 1 < nx; ++i) grad = std::max(grad, std::abs(f.at(i + 1) - f.at(i)) / h);
  } else {
    for (int j = 0; j < nx; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        grad = std::max(grad, std::abs(f.at(i + 1, j) - f.at(i, j)) / h);
        grad = std::max(grad, std::abs(f.at(j, i + 1) - f.at(j, i)) / h);
      }
  }
  return f.sup() + grad;
}

/// Consistency check of the moment identity E U^s = s∫ x^{s-1} P{U > x} dx
/// for nonnegative samples: the left side is the direct empirical mean,
/// the right side integrates the empirical survival function on a fine
/// quadrature grid (trapezoid), so agreement is approximate, not an
/// algebraic identity.
struct TailMomentCheck {
  double direct = 0.0;
  double via_tail = 0.0;
  double rel_gap() const {
    const double scale = std::max(std::abs(direct), 1e-300);
    return std::abs(direct - via_tail) / scale;
  }
};

inline TailMomentCheck tail_to_moments(std::span<const double> samples, double s,
                                       int min_samples = 1000) {
  if (static_cast<int>(samples.size()) < min_samples) {
    std::ostringstream os;
    os << "tail moments: insufficient samples (" << samples.size() << " < " << min_samples << ")";
    throw ValidationError(os.str());
  }
  if (!(s >= 1.0)) throw ValidationError("tail moments: order must be >= 1");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted)
    if (x < 0.0) throw ValidationError("tail moments: samples must be nonnegative");
  std::sort(sorted.begin(), sorted.end());

  TailMomentCheck check;
  double acc = 0.0;
  for (double x : sorted) acc += std::pow(x, s);
  check.direct = acc / static_cast<double>(sorted.size());

  const double xmax = sorted.back();
  const int n_quad = 8192;
  const double dx = xmax / n_quad;
  auto survival = [&](double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
  };
  auto integrand = [&](double x) { return s * std::pow(x, s - 1.0) * survival(x); };
  double integral = 0.5 * (integrand(0.0) + integrand(xmax));
  for (int i = 1; i < n_quad; ++i) integral += integrand(i * dx);
  check.via_tail = integral * dx;
  return check;
}

}  // namespace spde

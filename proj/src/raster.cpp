#include "tubelab/raster.hpp"

#include "tubelab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

namespace tubelab {

GridSpec::GridSpec(int n_, double cell_, Vecd lo_, Vecd hi_)
    : n(n_), cell(cell_), lo(std::move(lo_)), hi(std::move(hi_)) {
  AmbientDim check(n);
  if (n > kMaxGridDim) throw std::invalid_argument("GridSpec: dimension too large");
  if (!(cell > 0)) throw std::invalid_argument("GridSpec: cell size must be positive");
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("GridSpec: corner dimension mismatch");
  dims_.resize(n);
  double est = 1.0;
  for (int a = 0; a < n; ++a) {
    const double extent = hi(a) - lo(a);
    if (!(extent > 0)) throw std::invalid_argument("GridSpec: box must have positive extent");
    dims_[a] = static_cast<std::int64_t>(std::ceil(extent / cell - 1e-9));
    if (dims_[a] < 1) dims_[a] = 1;
    est *= static_cast<double>(dims_[a]);
  }
  if (est > 4.6e18) throw BudgetError(std::numeric_limits<std::int64_t>::max(), kDefaultCellBudget);
  strides_.assign(n, 1);
  // t-major: axis n-1 has the largest stride, the last spatial axis is unit.
  std::int64_t s = 1;
  for (int a = n - 2; a >= 0; --a) {
    strides_[a] = s;
    s *= dims_[a];
  }
  strides_[n - 1] = s;
  total_ = s * dims_[n - 1];
  cellvol_ = std::pow(cell, n);
}

GridSpec GridSpec::standard(int n, double cell) {
  Vecd lo(n), hi(n);
  lo.head(n - 1).setConstant(-2.0);
  hi.head(n - 1).setConstant(2.0);
  lo(n - 1) = 0.0;
  hi(n - 1) = 1.0;
  return GridSpec(n, cell, std::move(lo), std::move(hi));
}

std::int64_t GridSpec::flat_index(const std::vector<std::int64_t>& idx) const {
  std::int64_t flat = 0;
  for (int a = 0; a < n; ++a) flat += idx[a] * strides_[a];
  return flat;
}

Vecd GridSpec::center(std::int64_t flat) const {
  Vecd p(n);
  std::int64_t rem = flat;
  const std::int64_t kt = rem / strides_[n - 1];
  rem -= kt * strides_[n - 1];
  p(n - 1) = lo(n - 1) + (static_cast<double>(kt) + 0.5) * cell;
  for (int a = 0; a < n - 1; ++a) {
    const std::int64_t i = rem / strides_[a];
    rem -= i * strides_[a];
    p(a) = lo(a) + (static_cast<double>(i) + 0.5) * cell;
  }
  return p;
}

std::int64_t GridSpec::locate(const Vecd& p) const {
  std::int64_t flat = 0;
  for (int a = 0; a < n; ++a) {
    const auto i = static_cast<std::int64_t>(std::floor((p(a) - lo(a)) / cell));
    if (i < 0 || i >= dims_[a]) return -1;
    flat += i * strides_[a];
  }
  return flat;
}

ScalarField::ScalarField(GridSpec spec, std::int64_t budget) : spec_(std::move(spec)) {
  if (spec_.total_cells() > budget) throw BudgetError(spec_.total_cells(), budget);
  values_.assign(static_cast<std::size_t>(spec_.total_cells()), 0.0);
}

double ScalarField::total_mass() const {
  double sum = 0;
  for (double v : values_) sum += v;
  return sum * spec_.cell_volume();
}

double ScalarField::support_measure() const {
  std::int64_t count = 0;
  for (double v : values_) count += (v > 0) ? 1 : 0;
  return static_cast<double>(count) * spec_.cell_volume();
}

void visit_tube_cells(const GridSpec& spec, const Tubed& tube,
                      const std::function<void(std::int64_t)>& fn) {
  for_each_tube_cell(spec, tube, [&](std::int64_t i) { fn(i); });
}

std::int64_t tube_cell_count(const GridSpec& spec, const Tubed& tube) {
  std::int64_t count = 0;
  for_each_tube_cell(spec, tube, [&](std::int64_t) { ++count; });
  return count;
}

double tube_voxel_volume(const GridSpec& spec, const Tubed& tube) {
  return static_cast<double>(tube_cell_count(spec, tube)) * spec.cell_volume();
}

double tube_set_mass(const ScalarField& field, const Tubed& tube) {
  std::int64_t count = 0;
  for_each_tube_cell(field.spec(), tube, [&](std::int64_t i) { count += (field[i] > 0) ? 1 : 0; });
  return static_cast<double>(count) * field.spec().cell_volume();
}

ScalarField multiplicity_field(const TubeFamily& fam, const GridSpec& spec, std::int64_t budget) {
  if (fam.lines.empty()) throw std::invalid_argument("multiplicity_field: empty family");
  if (fam.n != spec.n) throw std::invalid_argument("multiplicity_field: dimension mismatch");
  if (!(spec.cell <= fam.delta * (1 + 1e-12)))
    throw std::invalid_argument("multiplicity_field: grid cell must be <= delta");
  ScalarField out(spec, budget);
  double* data = out.values().data();
  const int threads = worker_count();
  if (threads == 1) {
    for (std::int64_t i = 0; i < fam.size(); ++i)
      for_each_tube_cell(spec, fam.tube(i), [&](std::int64_t j) { data[j] += 1.0; });
  } else {
    // Integer adds commute, so the concurrent result matches sequential
    // accumulation bit for bit.
    parallel_for(
        fam.size(),
        [&](std::int64_t i) {
          for_each_tube_cell(spec, fam.tube(i), [&](std::int64_t j) {
            std::atomic_ref<double> cellref(data[j]);
            double old = cellref.load(std::memory_order_relaxed);
            while (!cellref.compare_exchange_weak(old, old + 1.0, std::memory_order_relaxed)) {
            }
          });
        },
        threads);
  }
  return out;
}

ScalarField indicator_field(const TubeFamily& fam, const GridSpec& spec, std::int64_t budget) {
  ScalarField f = multiplicity_field(fam, spec, budget);
  for (double& v : f.values()) v = (v > 0) ? 1.0 : 0.0;
  return f;
}

double lp_norm(const ScalarField& field, double p) {
  if (!(p >= 1)) throw std::domain_error("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0;
    for (double v : field.values()) m = std::max(m, std::abs(v));
    return m;
  }
  // Multiplicity fields hold small integers; memoize their powers.
  constexpr int kTab = 4096;
  std::vector<double> tab;
  double sum = 0;
  for (double v : field.values()) {
    if (v == 0) continue;
    const double a = std::abs(v);
    if (a < kTab && a == std::floor(a)) {
      if (tab.empty()) {
        tab.resize(kTab);
        for (int i = 0; i < kTab; ++i) tab[i] = std::pow(static_cast<double>(i), p);
      }
      sum += tab[static_cast<int>(a)];
    } else {
      sum += std::pow(a, p);
    }
  }
  return std::pow(sum * field.spec().cell_volume(), 1.0 / p);
}

double xray(const ScalarField& f, const LineSegd& l, double step) {
  if (!(step > 0)) throw std::domain_error("xray: step must be positive");
  if (!(step <= f.spec().cell * (1 + 1e-12)))
    throw std::invalid_argument("xray: step must be <= the grid cell size");
  const auto K = static_cast<std::int64_t>(std::llround(1.0 / step));
  const std::int64_t samples = std::max<std::int64_t>(1, K);
  const double h = 1.0 / static_cast<double>(samples);
  const int n = f.spec().n;
  Vecd p(n);
  double sum = 0;
  for (std::int64_t j = 0; j < samples; ++j) {
    const double t = (static_cast<double>(j) + 0.5) * h;
    p.head(n - 1) = l.x + l.v * t;
    p(n - 1) = t;
    const std::int64_t idx = f.spec().locate(p);
    if (idx >= 0) sum += f[idx];
  }
  return sum * l.length() * h;
}

double xray_delta(const ScalarField& f, const Tubed& t) {
  double sum = 0;
  for_each_tube_cell(f.spec(), t, [&](std::int64_t i) { sum += f[i]; });
  const int n = f.spec().n;
  return std::pow(t.delta, 1 - n) * sum * f.spec().cell_volume();
}

double mixed_norm_xray(const ScalarField& f, const Net& dirs, const Net& positions, double q,
                       double r) {
  if (!(q >= 1 && r >= 1)) throw std::domain_error("mixed_norm_xray: exponents must be >= 1");
  if (dirs.points.empty() || positions.points.empty())
    throw std::invalid_argument("mixed_norm_xray: empty net");
  const int n = f.spec().n;
  const double delta = dirs.delta;
  const double dn1 = std::pow(delta, n - 1);

  // Bounding ball of the support, for a cheap per-line reject.
  Vecd blo = Vecd::Constant(n, std::numeric_limits<double>::infinity());
  Vecd bhi = Vecd::Constant(n, -std::numeric_limits<double>::infinity());
  bool any = false;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    if (f[i] > 0) {
      const Vecd c = f.spec().center(i);
      blo = blo.cwiseMin(c);
      bhi = bhi.cwiseMax(c);
      any = true;
    }
  }
  if (!any) return 0;
  const Vecd bc = (blo + bhi) / 2;
  const double brad = (bhi - blo).norm() / 2;

  const bool rinf = std::isinf(r);
  const bool qinf = std::isinf(q);
  double outer = 0;
  for (const Vecd& v : dirs.points) {
    double inner = 0;
    for (const Vecd& x : positions.points) {
      const LineSegd l(x, v);
      if (point_segment_distance(bc, l) > brad + delta + f.spec().cell) continue;
      const double val = std::abs(xray_delta(f, Tubed(l, delta)));
      if (rinf)
        inner = std::max(inner, val);
      else
        inner += std::pow(val, r);
    }
    const double inner_norm = rinf ? inner : std::pow(dn1 * inner, 1.0 / r);
    if (qinf)
      outer = std::max(outer, inner_norm);
    else
      outer += std::pow(inner_norm, q);
  }
  return qinf ? outer : std::pow(dn1 * outer, 1.0 / q);
}

std::vector<std::pair<double, std::int64_t>> box_count(const ScalarField& field,
                                                       const std::vector<double>& scales) {
  const GridSpec& spec = field.spec();
  const int n = spec.n;
  std::vector<std::pair<double, std::int64_t>> out;
  out.reserve(scales.size());
  for (double s : scales) {
    const double ratio = s / spec.cell;
    const auto rr = static_cast<std::int64_t>(std::llround(ratio));
    if (rr < 1 || std::abs(ratio - static_cast<double>(rr)) > 1e-9 * ratio)
      throw std::invalid_argument("box_count: scale must be an integral multiple of the cell size");
    std::vector<std::int64_t> cdims(n), cstrides(n, 1);
    std::int64_t ctotal = 1;
    for (int a = 0; a < n; ++a) cdims[a] = (spec.dims()[a] + rr - 1) / rr;
    std::int64_t acc = 1;
    for (int a = n - 2; a >= 0; --a) {
      cstrides[a] = acc;
      acc *= cdims[a];
    }
    cstrides[n - 1] = acc;
    ctotal = acc * cdims[n - 1];
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(ctotal), 0);
    for (std::int64_t i = 0; i < field.size(); ++i) {
      if (!(field[i] > 0)) continue;
      std::int64_t rem = i, cube = 0;
      const std::int64_t kt = rem / spec.strides()[n - 1];
      rem -= kt * spec.strides()[n - 1];
      cube += (kt / rr) * cstrides[n - 1];
      for (int a = 0; a < n - 1; ++a) {
        const std::int64_t ia = rem / spec.strides()[a];
        rem -= ia * spec.strides()[a];
        cube += (ia / rr) * cstrides[a];
      }
      hit[static_cast<std::size_t>(cube)] = 1;
    }
    std::int64_t count = 0;
    for (std::uint8_t h : hit) count += h;
    out.emplace_back(s, count);
  }
  return out;
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_loglog_slope: need at least 2 points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0 && y > 0)) throw std::domain_error("fit_loglog_slope: points must be positive");
    sx += std::log(x);
    sy += std::log(y);
  }
  const double mx = sx / points.size(), my = sy / points.size();
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : points) {
    const double dx = std::log(x) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y) - my);
  }
  if (!(sxx > 0)) throw std::domain_error("fit_loglog_slope: degenerate abscissae");
  return sxy / sxx;
}

ScalarField ball_indicator(int n, double delta, const GridSpec& spec) {
  if (spec.n != n) throw std::invalid_argument("ball_indicator: dimension mismatch");
  ScalarField out(spec);
  Vecd c = Vecd::Zero(n);
  c(n - 1) = 0.5;
  // Walk the bounding box of the ball.
  std::vector<std::int64_t> ilo(n), ihi(n), it(n);
  for (int a = 0; a < n; ++a) {
    auto lo_i =
        static_cast<std::int64_t>(std::ceil((c(a) - delta - spec.lo(a)) / spec.cell - 0.5 - 1e-12));
    auto hi_i =
        static_cast<std::int64_t>(std::floor((c(a) + delta - spec.lo(a)) / spec.cell - 0.5 + 1e-12));
    ilo[a] = std::max<std::int64_t>(lo_i, 0);
    ihi[a] = std::min<std::int64_t>(hi_i, spec.dims()[a] - 1);
    if (ilo[a] > ihi[a]) return out;
    it[a] = ilo[a];
  }
  Vecd p(n);
  for (;;) {
    for (int a = 0; a < n; ++a) p(a) = spec.lo(a) + (static_cast<double>(it[a]) + 0.5) * spec.cell;
    if ((p - c).norm() <= delta) out[spec.flat_index(it)] = 1.0;
    int ax = n - 1;
    while (ax >= 0 && ++it[ax] > ihi[ax]) {
      it[ax] = ilo[ax];
      --ax;
    }
    if (ax < 0) break;
  }
  return out;
}

}  // namespace tubelab

#pragma once

#include "tubelab/family.hpp"
#include "tubelab/geom.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

// Voxel grids over the ambient box [-2,2]^{n-1} x [0,1]: multiplicity fields,
// discrete x-ray transforms, L^p norms, box counting.

namespace tubelab {

/// Raised when a requested grid exceeds the configured cell budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::int64_t requested, std::int64_t budget)
      : std::runtime_error("grid of " + std::to_string(requested) +
                           " cells exceeds the configured budget of " + std::to_string(budget) +
                           " (raise the budget to at least " + std::to_string(requested) + ")"),
        requested_cells(requested),
        budget_cells(budget) {}
  std::int64_t requested_cells;
  std::int64_t budget_cells;
};

constexpr std::int64_t kDefaultCellBudget = std::int64_t(1) << 28;
constexpr int kMaxGridDim = 16;

/// Uniform grid over an axis-aligned box. Axes 0..n-2 are the spatial
/// x-coordinates, axis n-1 is t. Flat indices are t-major, so the last spatial
/// axis is contiguous.
struct GridSpec {
  int n = 0;
  double cell = 0;
  Vecd lo, hi;

  GridSpec() = default;
  GridSpec(int n_, double cell_, Vecd lo_, Vecd hi_);

  /// Standard ambient box [-2,2]^{n-1} x [0,1].
  static GridSpec standard(int n, double cell);

  /// Default grid for tube radius delta: standard box, cell = delta/2.
  static GridSpec for_delta(int n, double delta) { return standard(n, delta / 2); }

  const std::vector<std::int64_t>& dims() const { return dims_; }
  const std::vector<std::int64_t>& strides() const { return strides_; }
  std::int64_t total_cells() const { return total_; }
  double cell_volume() const { return cellvol_; }

  std::int64_t flat_index(const std::vector<std::int64_t>& idx) const;
  /// Center of the cell with the given flat index.
  Vecd center(std::int64_t flat) const;
  /// Flat index of the cell containing p, or -1 if p is outside the box.
  std::int64_t locate(const Vecd& p) const;

 private:
  std::vector<std::int64_t> dims_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 0;
  double cellvol_ = 0;
};

/// Dense scalar values on a grid, one per cell.
struct ScalarField {
  explicit ScalarField(GridSpec spec, std::int64_t budget = kDefaultCellBudget);

  const GridSpec& spec() const { return spec_; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Sum of value * cellvol over all cells.
  double total_mass() const;
  /// Measure of {value > 0}.
  double support_measure() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

/// Calls fn(flat_index) for every cell whose center lies in the closed tube.
/// Work is confined to a per-t-layer bounding box of O((delta/cell)^{n-1})
/// cells; membership is the exact closed-tube test on cell centers.
template <typename Fn>
void for_each_tube_cell(const GridSpec& spec, const Tubed& tube, Fn&& fn) {
  const int n = spec.n;
  const int d = n - 1;
  const double cell = spec.cell;
  const auto& dims = spec.dims();
  const auto& strides = spec.strides();
  const LineSegd& l = tube.line;
  const double delta = tube.delta;
  const double delta2 = delta * delta;

  double x[kMaxGridDim], v[kMaxGridDim], w[kMaxGridDim], lo[kMaxGridDim];
  for (int i = 0; i < d; ++i) {
    x[i] = l.x(i);
    v[i] = l.v(i);
    w[i] = delta * (1.0 + std::abs(v[i])) + 1e-12;
    lo[i] = spec.lo(i);
  }
  const double dd = 1.0 + l.v.squaredNorm();
  const double tlo = spec.lo(n - 1);

  std::int64_t jlo[kMaxGridDim], jhi[kMaxGridDim], it[kMaxGridDim];
  double y[kMaxGridDim], c[kMaxGridDim];

  for (std::int64_t k = 0; k < dims[n - 1]; ++k) {
    const double tc = tlo + (static_cast<double>(k) + 0.5) * cell;
    bool empty = false;
    for (int i = 0; i < d; ++i) {
      y[i] = x[i] + v[i] * tc;
      auto a = static_cast<std::int64_t>(std::ceil((y[i] - w[i] - lo[i]) / cell - 0.5 - 1e-12));
      auto b = static_cast<std::int64_t>(std::floor((y[i] + w[i] - lo[i]) / cell - 0.5 + 1e-12));
      if (a < 0) a = 0;
      if (b > dims[i] - 1) b = dims[i] - 1;
      if (a > b) {
        empty = true;
        break;
      }
      jlo[i] = a;
      jhi[i] = b;
      it[i] = a;
    }
    if (empty) continue;

    const std::int64_t tbase = k * strides[n - 1];
    for (;;) {
      double num = tc;
      for (int i = 0; i < d; ++i) {
        c[i] = lo[i] + (static_cast<double>(it[i]) + 0.5) * cell;
        num += (c[i] - x[i]) * v[i];
      }
      double u = num / dd;
      u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
      double dist2 = (tc - u) * (tc - u);
      for (int i = 0; i < d; ++i) {
        const double r = c[i] - x[i] - v[i] * u;
        dist2 += r * r;
      }
      if (dist2 <= delta2) {
        std::int64_t flat = tbase;
        for (int i = 0; i < d; ++i) flat += it[i] * strides[i];
        fn(flat);
      }
      int ax = d - 1;
      while (ax >= 0 && ++it[ax] > jhi[ax]) {
        it[ax] = jlo[ax];
        --ax;
      }
      if (ax < 0) break;
    }
  }
}

/// Type-erased variant of for_each_tube_cell.
void visit_tube_cells(const GridSpec& spec, const Tubed& tube,
                      const std::function<void(std::int64_t)>& fn);

/// Number of grid cells whose center lies in the tube.
std::int64_t tube_cell_count(const GridSpec& spec, const Tubed& tube);

/// Voxel measure of the tube: cell count * cell volume.
double tube_voxel_volume(const GridSpec& spec, const Tubed& tube);

/// Voxel measure of T_l intersected with {field > 0}.
double tube_set_mass(const ScalarField& field, const Tubed& tube);

/// Multiplicity field of a family: each cell holds |{l : cell center in T_l}|.
/// Accumulation parallelizes over tubes; the result equals sequential
/// accumulation exactly (integer adds commute).
ScalarField multiplicity_field(const TubeFamily& fam, const GridSpec& spec,
                               std::int64_t budget = kDefaultCellBudget);

/// 0/1 indicator of the union of the family's tubes.
ScalarField indicator_field(const TubeFamily& fam, const GridSpec& spec,
                            std::int64_t budget = kDefaultCellBudget);

/// (sum |value|^p * cellvol)^{1/p}; p = infinity gives the max norm.
double lp_norm(const ScalarField& field, double p);

/// Riemann sum of f along the segment with arclength weighting; the step is
/// rounded so that an integral number of midpoint samples covers [0,1].
double xray(const ScalarField& f, const LineSegd& l, double step);

/// Discrete x-ray transform: delta^{1-n} * integral of f over the tube.
double xray_delta(const ScalarField& f, const Tubed& t);

/// Discretized mixed norm
///   (delta^{n-1} sum_v (delta^{n-1} sum_x |X_delta f(l(x,v))|^r)^{q/r})^{1/q}
/// over v in dirs, x in positions; q or r may be infinity (sup). delta comes
/// from the direction net.
double mixed_norm_xray(const ScalarField& f, const Net& dirs, const Net& positions, double q,
                       double r);

/// For each scale s (an integral multiple of the cell size, dyadic in use),
/// the number of s-cubes of the aligned partition of the box containing at
/// least one cell with value > 0.
std::vector<std::pair<double, std::int64_t>> box_count(const ScalarField& field,
                                                       const std::vector<double>& scales);

/// Least-squares slope of log(y) against log(x). Requires >= 2 points with
/// positive x and y.
double fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Indicator of the delta-ball centered at the box center (0,...,0,1/2).
ScalarField ball_indicator(int n, double delta, const GridSpec& spec);

}  // namespace tubelab

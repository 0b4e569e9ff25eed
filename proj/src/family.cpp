#include "tubelab/family.hpp"

#include "tubelab/raster.hpp"
#include "tubelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tubelab {

namespace {

// Total order on vectors for deterministic grouping of repeated net values.
struct VecLess {
  bool operator()(const Vecd& a, const Vecd& b) const {
    for (int i = 0; i < a.size(); ++i) {
      if (a(i) < b(i)) return true;
      if (a(i) > b(i)) return false;
    }
    return false;
  }
};

std::int64_t count_separation_violations(const std::vector<Vecd>& pts, double delta) {
  std::int64_t bad = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if ((pts[i] - pts[j]).norm() < delta - 1e-12) ++bad;
  return bad;
}

}  // namespace

Net build_net(int n, double delta, std::uint64_t seed, NetMode mode) {
  AmbientDim check(n);
  if (!(delta > 0 && delta < 1)) throw std::domain_error("build_net: delta must lie in (0,1)");
  const int d = n - 1;
  const double radius = 1.0 - delta / 2;  // keeps tubes inside the ambient box
  Net net;
  net.delta = delta;

  if (mode == NetMode::Lattice) {
    const auto reach = static_cast<std::int64_t>(std::floor(radius / delta));
    std::vector<std::int64_t> it(d, -reach);
    Vecd p(d);
    for (;;) {
      for (int a = 0; a < d; ++a) p(a) = static_cast<double>(it[a]) * delta;
      if (p.norm() <= radius) net.points.push_back(p);
      int ax = d - 1;
      while (ax >= 0 && ++it[ax] > reach) {
        it[ax] = -reach;
        --ax;
      }
      if (ax < 0) break;
    }
    if (net.points.empty()) net.points.push_back(Vecd::Zero(d));
  } else {
    // Greedy Poisson-disk: accept uniform candidates at distance >= delta from
    // all accepted points, stop after a long run of consecutive rejections.
    // Accepted points are bucketed on a delta-grid so each test is O(3^d).
    Rng rng(seed);
    const std::int64_t patience = 400 + static_cast<std::int64_t>(40.0 / std::pow(delta, d - 1));
    std::int64_t rejected = 0;
    std::map<std::vector<std::int64_t>, std::vector<std::size_t>> buckets;
    auto bucket_of = [&](const Vecd& p) {
      std::vector<std::int64_t> key(static_cast<std::size_t>(d));
      for (int a = 0; a < d; ++a)
        key[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::floor(p(a) / delta));
      return key;
    };
    Vecd p(d);
    std::vector<std::int64_t> nb(static_cast<std::size_t>(d));
    while (rejected < patience) {
      for (int a = 0; a < d; ++a) p(a) = rng.uniform(-radius, radius);
      if (p.norm() > radius) continue;  // not counted against patience
      const auto key = bucket_of(p);
      bool ok = true;
      std::vector<int> off(static_cast<std::size_t>(d), -1);
      for (bool done = false; !done && ok;) {
        for (int a = 0; a < d; ++a)
          nb[static_cast<std::size_t>(a)] = key[static_cast<std::size_t>(a)] + off[static_cast<std::size_t>(a)];
        if (const auto it = buckets.find(nb); it != buckets.end()) {
          for (std::size_t idx : it->second)
            if ((p - net.points[idx]).norm() < delta) {
              ok = false;
              break;
            }
        }
        int ax = d - 1;
        while (ax >= 0 && ++off[static_cast<std::size_t>(ax)] > 1) {
          off[static_cast<std::size_t>(ax)] = -1;
          --ax;
        }
        done = ax < 0;
      }
      if (ok) {
        buckets[key].push_back(net.points.size());
        net.points.push_back(p);
        rejected = 0;
      } else {
        ++rejected;
      }
    }
    if (net.points.empty()) net.points.push_back(Vecd::Zero(d));
  }
  return net;
}

TubeFamily::TubeFamily(int n_, double delta_, int m_, std::vector<LineSegd> lines_,
                       std::uint64_t seed_)
    : n(n_), delta(delta_), m(m_), lines(std::move(lines_)), seed(seed_) {
  AmbientDim check(n);
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("TubeFamily: delta must lie in (0,1)");
  const double capacity = std::ceil(std::pow(delta, 1 - n));
  if (m < 1 || static_cast<double>(m) > capacity)
    throw std::invalid_argument("TubeFamily: m must satisfy 1 <= m <= ceil(delta^{1-n})");
  for (const LineSegd& l : lines)
    if (l.ambient_dim() != n) throw std::invalid_argument("TubeFamily: line dimension mismatch");
}

FamilyReport validate_family(const TubeFamily& f) {
  FamilyReport rep;
  std::map<Vecd, int, VecLess> by_dir;
  std::map<Vecd, int, VecLess> by_pos;
  for (const LineSegd& l : f.lines) {
    ++by_dir[l.v];
    ++by_pos[l.x];
  }
  for (const auto& [v, count] : by_dir) rep.max_multiplicity = std::max(rep.max_multiplicity, count);
  rep.multiplicity_ok = rep.max_multiplicity <= f.m && !f.lines.empty();

  std::vector<Vecd> dirs, poss;
  dirs.reserve(by_dir.size());
  for (const auto& [v, c] : by_dir) dirs.push_back(v);
  poss.reserve(by_pos.size());
  for (const auto& [x, c] : by_pos) poss.push_back(x);
  rep.direction_separation_violations = count_separation_violations(dirs, f.delta);
  rep.position_separation_violations = count_separation_violations(poss, f.delta);
  return rep;
}

double DensityStats::consistency_residual() const {
  const double lhs = mu * set_measure;
  const double rhs = lambda * norm_total;
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  return scale > 0 ? std::abs(lhs - rhs) / scale : 0.0;
}

DensityStats density_stats(const TubeFamily& f, const ScalarField& field) {
  if (f.lines.empty()) throw std::invalid_argument("density_stats: empty family");
  const GridSpec& spec = field.spec();
  if (spec.n != f.n) throw std::invalid_argument("density_stats: dimension mismatch");

  std::int64_t set_cells = 0;
  for (std::int64_t i = 0; i < field.size(); ++i) set_cells += (field[i] > 0) ? 1 : 0;
  if (set_cells == 0) throw std::runtime_error("density_stats: empty target set");

  const double cn = unit_ball_volume(f.n - 1);
  const double dn1 = std::pow(f.delta, f.n - 1);
  double mass_total = 0, norm_total = 0;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    mass_total += tube_set_mass(field, f.tube(i));
    norm_total += cn * dn1 * f.lines[static_cast<std::size_t>(i)].length();
  }

  DensityStats out;
  out.set_measure = static_cast<double>(set_cells) * spec.cell_volume();
  out.norm_total = norm_total;
  out.lambda = mass_total / norm_total;
  out.family_size = f.size();
  // Mean multiplicity of the family over the cells of E.
  const ScalarField mult = multiplicity_field(f, spec);
  double mult_mass = 0;
  for (std::int64_t i = 0; i < field.size(); ++i)
    if (field[i] > 0) mult_mass += mult[i];
  out.mu = mult_mass * spec.cell_volume() / out.set_measure;
  return out;
}

TubeFamily refine_by_density(const TubeFamily& f, const ScalarField& field, double lambda_target,
                             int tolerance_dyadic) {
  if (tolerance_dyadic < 1) throw std::domain_error("refine_by_density: tolerance_dyadic must be >= 1");
  const double center = lambda_target * std::pow(f.delta, f.n - 1);
  const double factor = std::pow(2.0, tolerance_dyadic);
  std::vector<LineSegd> kept;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const double mass = tube_set_mass(field, f.tube(i));
    if (mass >= center / factor && mass <= center * factor) kept.push_back(f.lines[static_cast<std::size_t>(i)]);
  }
  TubeFamily out = f;
  out.lines = std::move(kept);
  return out;
}

}  // namespace tubelab

#include "tubelab/structure.hpp"

#include "tubelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tubelab {

namespace {

Vecd spatial_mean(const std::vector<Vecd>& pts) {
  Vecd m = Vecd::Zero(pts.front().size());
  for (const Vecd& p : pts) m += p;
  return m / static_cast<double>(pts.size());
}

OrientedBoxd plate_box(const Vecd& center, const Matd& axes, double C, double w, double delta) {
  const int n = static_cast<int>(center.size());
  Vecd half = Vecd::Constant(n, C * delta / 2);
  half(0) = C / 2;
  half(1) = C * w / 2;
  return OrientedBoxd(center, axes, half);
}

// Deterministic pair enumeration: all pairs when they fit the budget,
// otherwise a seeded sample without replacement semantics (duplicates allowed,
// deterministic order).
std::vector<std::pair<std::int64_t, std::int64_t>> sample_pairs(std::int64_t size,
                                                                std::int64_t max_pairs,
                                                                std::uint64_t seed) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  const std::int64_t all = size * (size - 1) / 2;
  if (all <= max_pairs) {
    pairs.reserve(static_cast<std::size_t>(all));
    for (std::int64_t i = 0; i < size; ++i)
      for (std::int64_t j = i + 1; j < size; ++j) pairs.emplace_back(i, j);
  } else {
    Rng rng(seed);
    pairs.reserve(static_cast<std::size_t>(max_pairs));
    for (std::int64_t k = 0; k < max_pairs; ++k) {
      const auto i = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size)));
      auto j = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(size - 1)));
      if (j >= i) ++j;
      pairs.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  return pairs;
}

}  // namespace

double plate_value(const TubeFamily& f, const OrientedBoxd& box, double w,
                   std::int64_t* count_out) {
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < f.size(); ++i)
    if (box_contains_tube(box, f.tube(i))) ++count;
  if (count_out) *count_out = count;
  return static_cast<double>(count) / (w / f.delta);
}

PlateResult plate_number(const TubeFamily& f, const PlateSearchOptions& opts) {
  if (f.lines.empty()) throw std::invalid_argument("plate_number: empty family");
  const int n = f.n;
  const double delta = f.delta;
  const double C = opts.box_constant;

  PlateResult best;
  best.value = -1;

  auto consider = [&](const Vecd& center, const Vecd& axis1, const Vecd* axis2, double w) {
    Matd partial(n, axis2 ? 2 : 1);
    partial.col(0) = axis1;
    if (axis2) partial.col(1) = *axis2;
    const Matd axes = complete_basis(partial);
    OrientedBoxd box;
    try {
      box = plate_box(center, axes, C, w, delta);
    } catch (const std::invalid_argument&) {
      return;  // degenerate axes
    }
    std::int64_t count = 0;
    const double value = plate_value(f, box, w, &count);
    if (value > best.value) {
      best.value = value;
      best.witness = box;
      best.w = w;
      best.count = count;
    }
  };

  // Single-tube candidates at the thinnest width.
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const LineSegd& l = f.lines[static_cast<std::size_t>(i)];
    consider(midpoint(l), direction(l), nullptr, delta);
  }

  // Pair candidates: long axis from the first tube, second axis toward the
  // partner (by offset, and by direction for slanted partners), w from a
  // dyadic sweep starting at the width the pair itself needs.
  for (const auto& [a, b] : sample_pairs(f.size(), opts.max_pairs, opts.seed)) {
    const LineSegd& la = f.lines[static_cast<std::size_t>(a)];
    const LineSegd& lb = f.lines[static_cast<std::size_t>(b)];
    const Vecd axis1 = direction(la);
    const Vecd center = (midpoint(la) + midpoint(lb)) / 2;

    std::vector<Vecd> axis2s;
    const Vecd off = midpoint(lb) - midpoint(la);
    Vecd off_perp = off - off.dot(axis1) * axis1;
    if (off_perp.norm() > 1e-9) axis2s.push_back(off_perp.normalized());
    Vecd dir_perp = direction(lb) - direction(lb).dot(axis1) * axis1;
    if (dir_perp.norm() > 1e-9) axis2s.push_back(dir_perp.normalized());
    if (axis2s.empty()) continue;

    for (const Vecd& axis2 : axis2s) {
      // Width needed for the pair along axis2, then a couple of dyadic levels.
      double need = delta;
      for (const LineSegd* l : {&la, &lb})
        for (const Vecd& e : {l->tail(), l->head()})
          need = std::max(need, std::abs(axis2.dot(e - center)) * 2 / C + 2 * delta / C);
      double w = delta;
      while (w < need && w < 1) w *= 2;
      consider(center, axis1, &axis2, w);
      if (2 * w <= 1) consider(center, axis1, &axis2, 2 * w);
    }
  }

  // Local refinement of the best candidate: recenter on the contained tubes,
  // realign the long axis with their mean direction, and try shrinking w.
  for (int iter = 0; iter < opts.refine_iters; ++iter) {
    std::vector<Vecd> mids, dirs;
    for (std::int64_t i = 0; i < f.size(); ++i)
      if (box_contains_tube(best.witness, f.tube(i))) {
        mids.push_back(midpoint(f.lines[static_cast<std::size_t>(i)]));
        dirs.push_back(direction(f.lines[static_cast<std::size_t>(i)]));
      }
    if (mids.empty()) break;
    const Vecd center = spatial_mean(mids);
    Vecd axis1 = spatial_mean(dirs);
    if (axis1.norm() < 1e-9) break;
    axis1.normalize();
    Vecd axis2 = best.witness.axes.col(1) - best.witness.axes.col(1).dot(axis1) * axis1;
    if (axis2.norm() < 1e-9) break;
    axis2.normalize();
    const PlateResult prev = best;
    for (double w = delta; w <= 2 * best.w && w < 2; w *= 2) consider(center, axis1, &axis2, w);
    if (best.value <= prev.value) break;
  }

  // The reported value is pinned to a final recount of the stored witness.
  best.value = plate_value(f, best.witness, best.w, &best.count);
  return best;
}

std::vector<DyadicBin> dyadic_decompose(const LineSegd& l, const TubeFamily& f,
                                        const ScalarField& E_field) {
  const GridSpec& spec = E_field.spec();
  if (spec.n != f.n) throw std::invalid_argument("dyadic_decompose: dimension mismatch");
  bool member = false;
  for (const LineSegd& s : f.lines)
    if (s.x == l.x && s.v == l.v) {
      member = true;
      break;
    }
  if (!member) throw std::invalid_argument("dyadic_decompose: l must belong to the family");

  const double delta = f.delta;
  const Tubed tube(l, delta);

  // Candidate tubes: only those meeting T_l can cover its cells.
  std::vector<std::int64_t> cand;
  std::vector<int> cand_level;
  const int max_level =
      std::max(0, static_cast<int>(std::ceil(std::log2((2.0 + delta) / delta)))) + 1;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const LineSegd& s = f.lines[static_cast<std::size_t>(i)];
    if (segment_distance(l, s) > 2 * delta + 1e-12) continue;
    const double a = delta + angle(l, s);
    int lev = static_cast<int>(std::ceil(std::log2(a / delta) - 1e-12));
    lev = std::clamp(lev, 0, max_level);
    cand.push_back(i);
    cand_level.push_back(lev);
  }

  std::map<std::pair<int, int>, DyadicBin> bins;  // key: (mu level exponent, sigma level)
  std::vector<int> levels_hit(static_cast<std::size_t>(max_level) + 1, 0);
  for_each_tube_cell(spec, tube, [&](std::int64_t flat) {
    if (!(E_field[flat] > 0)) return;
    const Vecd c = spec.center(flat);
    std::fill(levels_hit.begin(), levels_hit.end(), 0);
    int total = 0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (tube_contains(f.tube(cand[k]), c)) {
        ++total;
        ++levels_hit[static_cast<std::size_t>(cand_level[k])];
      }
    }
    if (total == 0) return;  // cannot happen when l is in f, kept as a guard
    const int mu_exp = static_cast<int>(std::floor(std::log2(static_cast<double>(total)) + 1e-12));
    int cum = 0, sig = max_level;
    for (int j = 0; j <= max_level; ++j) {
      cum += levels_hit[static_cast<std::size_t>(j)];
      if (2 * cum >= total) {
        sig = j;
        break;
      }
    }
    DyadicBin& bin = bins[{mu_exp, sig}];
    if (bin.cells.empty()) {
      bin.line = l;
      bin.mu = 1 << mu_exp;
      bin.sigma = delta * std::pow(2.0, sig);
    }
    bin.cells.push_back(flat);
  });

  std::vector<DyadicBin> out;
  out.reserve(bins.size());
  for (auto& [key, bin] : bins) out.push_back(std::move(bin));
  return out;
}

TubeFamily hairbrush(const TubeFamily& f, const LineSegd& l0, double sigma, int slack_dyadic) {
  if (!(sigma > 0)) throw std::domain_error("hairbrush: sigma must be positive");
  if (slack_dyadic < 0) throw std::domain_error("hairbrush: slack must be >= 0");
  const double factor = std::pow(2.0, slack_dyadic);
  const double lo = sigma / factor * (1 - 1e-12);
  const double hi = sigma * factor * (1 + 1e-12);
  TubeFamily out = f;
  out.lines.clear();
  for (const LineSegd& l : f.lines) {
    if (segment_distance(l0, l) > 2 * f.delta * (1 + 1e-12)) continue;
    const double a = f.delta + angle(l0, l);
    if (a >= lo && a <= hi) out.lines.push_back(l);
  }
  return out;
}

bool two_ends_check(const Tubed& t, const ScalarField& E_field, const TwoEndsParams& params,
                    double lambda) {
  if (!(lambda > 0)) throw std::domain_error("two_ends_check: lambda must be positive");
  if (params.N < 2) throw std::domain_error("two_ends_check: N must be >= 2");
  const GridSpec& spec = E_field.spec();
  const int n = spec.n;
  const double delta = t.delta;
  const double R = std::pow(delta, 1.0 / params.N);

  // Occupied tube cells, cached with their centers.
  std::vector<Vecd> pts;
  for_each_tube_cell(spec, t, [&](std::int64_t flat) {
    if (E_field[flat] > 0) pts.push_back(spec.center(flat));
  });

  const double slack =
      params.slack_kappa * std::pow(std::max(1.0, std::log2(1.0 / delta)), params.slack_nu);
  const double bound = std::pow(delta, params.epsilon / (2.0 * params.N)) * lambda *
                       unit_ball_volume(n - 1) * std::pow(delta, n - 1) * slack;

  const double len = t.line.length();
  const double tstep = R / (2.0 * len);
  const auto steps = static_cast<std::int64_t>(std::ceil(1.0 / tstep));
  const double cellvol = spec.cell_volume();
  for (std::int64_t k = 0; k <= steps; ++k) {
    const double tk = std::min(1.0, static_cast<double>(k) * tstep);
    const Vecd center = point_at(t.line, tk);
    std::int64_t inside = 0;
    for (const Vecd& p : pts)
      if ((p - center).norm() <= R) ++inside;
    if (static_cast<double>(inside) * cellvol > bound) return false;
  }
  return true;
}

namespace {

// Sorted sparse multiplicity of a set of tubes: (flat cell, count), ascending.
std::vector<std::pair<std::int64_t, double>> sparse_multiplicity(
    const TubeFamily& f, const std::vector<std::int64_t>& members, const GridSpec& spec) {
  std::vector<std::int64_t> hits;
  for (std::int64_t i : members)
    for_each_tube_cell(spec, f.tube(i), [&](std::int64_t flat) { hits.push_back(flat); });
  std::sort(hits.begin(), hits.end());
  std::vector<std::pair<std::int64_t, double>> out;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    out.emplace_back(hits[i], static_cast<double>(j - i));
    i = j;
  }
  return out;
}

}  // namespace

BilinearSplit bilinear_split(const TubeFamily& f, double c0, const ExponentProfile& profile,
                             const GridSpec& spec, std::int64_t budget) {
  if (!(c0 > 0 && c0 < 1)) throw std::domain_error("bilinear_split: c0 must lie in (0,1)");
  if (f.lines.empty()) throw std::invalid_argument("bilinear_split: empty family");
  const int d = f.n - 1;
  const double h = c0 / 4;

  std::map<std::vector<std::int64_t>, std::vector<std::int64_t>> groups;
  for (std::int64_t i = 0; i < f.size(); ++i) {
    const Vecd& v = f.lines[static_cast<std::size_t>(i)].v;
    std::vector<std::int64_t> key(d);
    for (int a = 0; a < d; ++a) key[a] = static_cast<std::int64_t>(std::floor((v(a) + 1.0) / h));
    groups[key].push_back(i);
  }

  std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> cells(
      groups.begin(), groups.end());

  // Admissible pairs: direction sets separated by at least c0/2.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      double sep = std::numeric_limits<double>::infinity();
      for (std::int64_t a : cells[i].second)
        for (std::int64_t b : cells[j].second)
          sep = std::min(sep, (f.lines[static_cast<std::size_t>(a)].v -
                               f.lines[static_cast<std::size_t>(b)].v)
                                  .norm());
      if (sep >= c0 / 2 * (1 - 1e-12)) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw std::runtime_error("bilinear_split: no separated pair");

  // Sparse per-cell multiplicity fields, then two-pointer products per pair.
  std::vector<std::vector<std::pair<std::int64_t, double>>> sparse(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    sparse[i] = sparse_multiplicity(f, cells[i].second, spec);

  const double pp = profile.pprime().value();
  const double pp2 = pp / 2;
  const double cellvol = spec.cell_volume();

  BilinearSplit best;
  best.norm = -1;
  std::size_t best_i = 0, best_j = 0;
  for (const auto& [i, j] : pairs) {
    const auto& A = sparse[i];
    const auto& B = sparse[j];
    double sum = 0;
    std::size_t a = 0, b = 0;
    while (a < A.size() && b < B.size()) {
      if (A[a].first < B[b].first)
        ++a;
      else if (B[b].first < A[a].first)
        ++b;
      else {
        sum += std::pow(A[a].second * B[b].second, pp2);
        ++a;
        ++b;
      }
    }
    const double norm = std::pow(sum * cellvol, 1.0 / pp);
    if (norm > best.norm) {
      best.norm = norm;
      best_i = i;
      best_j = j;
    }
  }

  auto subfamily = [&](const std::vector<std::int64_t>& members) {
    TubeFamily sub = f;
    sub.lines.clear();
    for (std::int64_t i : members) sub.lines.push_back(f.lines[static_cast<std::size_t>(i)]);
    return sub;
  };
  best.first = subfamily(cells[best_i].second);
  best.second = subfamily(cells[best_j].second);
  best.center_first = Vecd(d);
  best.center_second = Vecd(d);
  for (int a = 0; a < d; ++a) {
    best.center_first(a) = (static_cast<double>(cells[best_i].first[a]) + 0.5) * h - 1.0;
    best.center_second(a) = (static_cast<double>(cells[best_j].first[a]) + 0.5) * h - 1.0;
  }
  (void)budget;
  return best;
}

CordobaResult cordoba_l2(const TubeFamily& f, const std::function<bool(const Vecd&)>& restrict_to,
                         const GridSpec* spec_in, std::int64_t budget) {
  if (f.lines.empty()) throw std::invalid_argument("cordoba_l2: empty family");
  const GridSpec spec = spec_in ? *spec_in : GridSpec::for_delta(f.n, f.delta);
  ScalarField field = multiplicity_field(f, spec, budget);
  if (restrict_to) {
    for (std::int64_t i = 0; i < field.size(); ++i)
      if (field[i] != 0 && !restrict_to(spec.center(i))) field[i] = 0;
  }
  CordobaResult out;
  double sum = 0;
  for (std::int64_t i = 0; i < field.size(); ++i) sum += field[i] * field[i];
  out.measured_l2_sq = sum * spec.cell_volume();
  for (std::int64_t i = 0; i < f.size(); ++i)
    for (std::int64_t j = 0; j < f.size(); ++j)
      out.incidence_bound += tube_intersection_bound(f.lines[static_cast<std::size_t>(i)],
                                                     f.lines[static_cast<std::size_t>(j)], f.delta);
  return out;
}

double slab_mass(const ScalarField& E_field, const Slabd& s) {
  const GridSpec& spec = E_field.spec();
  if (s.dim() != spec.n) throw std::invalid_argument("slab_mass: dimension mismatch");
  double sum = 0;
  for (std::int64_t i = 0; i < E_field.size(); ++i) {
    const double v = E_field[i];
    if (v == 0) continue;
    if (s.contains(spec.center(i))) sum += v;
  }
  return sum * spec.cell_volume();
}

SlabSearchResult best_slab_search(const ScalarField& E_field, const std::vector<double>& thetas,
                                  const TubeFamily& candidates_from, const SlabSearchOptions& opts) {
  if (candidates_from.lines.empty()) throw std::invalid_argument("best_slab_search: empty family");
  if (thetas.empty()) throw std::invalid_argument("best_slab_search: empty theta list");
  const GridSpec& spec = E_field.spec();
  const int n = spec.n;

  // Occupied cells, cached as rows of a matrix.
  std::vector<std::int64_t> occ;
  for (std::int64_t i = 0; i < E_field.size(); ++i)
    if (E_field[i] != 0) occ.push_back(i);
  Matd pos(static_cast<std::int64_t>(occ.size()), n);
  Vecd val(static_cast<std::int64_t>(occ.size()));
  for (std::size_t k = 0; k < occ.size(); ++k) {
    pos.row(static_cast<std::int64_t>(k)) = spec.center(occ[k]).transpose();
    val(static_cast<std::int64_t>(k)) = E_field[occ[k]];
  }

  SlabSearchResult best;
  double best_score = -1;

  auto consider = [&](const Vecd& pt, const Vecd& u1, const Vecd& u2) {
    Matd partial(n, 2);
    partial.col(0) = u1;
    partial.col(1) = u2;
    const Matd basis = complete_basis(partial);
    const Matd normal = basis.rightCols(n - 2);
    const Matd proj = (pos.rowwise() - pt.transpose()) * normal;  // occ x (n-2)
    const Vecd dist = proj.rowwise().norm();
    for (double theta : thetas) {
      double mass = 0;
      for (std::int64_t k = 0; k < dist.size(); ++k)
        if (dist(k) <= theta / 2) mass += val(k);
      mass *= spec.cell_volume();
      const double score = mass / std::sqrt(theta);
      if (score > best_score) {
        best_score = score;
        best.slab = Slabd(pt, normal, theta);
        best.theta = theta;
        best.mass = mass;
      }
    }
  };

  const auto& f = candidates_from;
  if (f.size() == 1) {
    // Single tube: span by its direction and an arbitrary transverse axis.
    const Vecd u1 = direction(f.lines[0]);
    Matd one(n, 1);
    one.col(0) = u1;
    const Matd basis = complete_basis(one);
    consider(midpoint(f.lines[0]), u1, basis.col(1));
  }
  for (const auto& [a, b] : sample_pairs(f.size(), opts.max_pairs, opts.seed)) {
    const LineSegd& la = f.lines[static_cast<std::size_t>(a)];
    const LineSegd& lb = f.lines[static_cast<std::size_t>(b)];
    const Vecd u1 = direction(la);
    const Vecd pt = midpoint(la);
    Vecd w1 = direction(lb) - direction(lb).dot(u1) * u1;
    if (w1.norm() > 1e-9) consider(pt, u1, w1.normalized());
    Vecd w2 = midpoint(lb) - midpoint(la);
    w2 -= w2.dot(u1) * u1;
    if (w2.norm() > 1e-9) consider(pt, u1, w2.normalized());
  }
  if (best_score < 0) throw std::runtime_error("best_slab_search: no nondegenerate candidate slab");

  // Pin the reported mass to a recount through slab_mass.
  best.mass = slab_mass(E_field, best.slab);
  return best;
}

}  // namespace tubelab

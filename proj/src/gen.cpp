#include "tubelab/gen.hpp"

#include "tubelab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tubelab {

namespace {

// Lattice points of spacing s in the disk of radius r around the origin of
// R^d, in deterministic lexicographic order.
std::vector<Vecd> lattice_points(int d, double s, double r) {
  std::vector<Vecd> pts;
  const auto reach = static_cast<std::int64_t>(std::floor(r / s));
  std::vector<std::int64_t> it(d, -reach);
  Vecd p(d);
  if (reach < 0) return pts;
  for (;;) {
    for (int a = 0; a < d; ++a) p(a) = static_cast<double>(it[a]) * s;
    if (p.norm() <= r) pts.push_back(p);
    int ax = d - 1;
    while (ax >= 0 && ++it[ax] > reach) {
      it[ax] = -reach;
      --ax;
    }
    if (ax < 0) break;
  }
  return pts;
}

bool lex_less(const Vecd& a, const Vecd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a(i) < b(i)) return true;
    if (a(i) > b(i)) return false;
  }
  return false;
}

Vecd snap_to_lattice(const Vecd& p, double s) {
  Vecd q(p.size());
  for (int i = 0; i < p.size(); ++i) q(i) = std::round(p(i) / s) * s;
  return q;
}

// Deterministic enumeration of lattice offsets 0, +-e1, +-e2, ..., (1,1,...),
// used to place m positions per direction.
Vecd lattice_offset(int d, int k) {
  Vecd o = Vecd::Zero(d);
  if (k == 0) return o;
  if (k <= 2 * d) {
    const int axis = (k - 1) / 2;
    o(axis) = (k % 2 == 1) ? 1.0 : -1.0;
    return o;
  }
  // Ring walk for larger k: diagonal-ish offsets of growing radius.
  const int ring = (k - 2 * d - 1) / (2 * d) + 1;
  const int rem = (k - 2 * d - 1) % (2 * d);
  const int axis = rem / 2;
  o.setConstant(static_cast<double>(ring));
  o(axis) = (rem % 2 == 1) ? -static_cast<double>(ring + 1) : static_cast<double>(ring + 1);
  return o;
}

}  // namespace

TubeFamily gen_single(int n, double delta, const Vecd& v) {
  AmbientDim check(n);
  if (v.size() != n - 1) throw std::invalid_argument("gen_single: slope dimension mismatch");
  if (!(v.norm() < 1)) throw std::domain_error("gen_single: |v| must be < 1");
  std::vector<LineSegd> lines;
  lines.emplace_back(Vecd::Zero(n - 1), v);
  return TubeFamily(n, delta, 1, std::move(lines));
}

ScalarField gen_ball(int n, double delta, double cell) {
  if (cell <= 0) cell = delta / 2;
  return ball_indicator(n, delta, GridSpec::standard(n, cell));
}

TubeFamily gen_bush(int n, double delta, const Vecd& center, int count, std::uint64_t seed) {
  AmbientDim check(n);
  if (center.size() != n) throw std::invalid_argument("gen_bush: center must be a point of R^n");
  const double ct = center(n - 1);
  if (!(ct >= 0 && ct <= 1)) throw std::domain_error("gen_bush: center t-coordinate must lie in [0,1]");
  if (count < 1) throw std::domain_error("gen_bush: count must be >= 1");
  const Vecd cxy = center.head(n - 1);
  const double radius = 1.0 - delta / 2;

  // Direction spacing delta/ct keeps the induced positions delta-separated.
  const double spacing = (ct > 0) ? delta / ct : delta;
  std::vector<Vecd> candidates = lattice_points(n - 1, spacing, radius);
  std::sort(candidates.begin(), candidates.end(), [](const Vecd& a, const Vecd& b) {
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na != nb) return na < nb;
    return lex_less(a, b);
  });

  std::vector<LineSegd> lines;
  for (const Vecd& v : candidates) {
    if (static_cast<int>(lines.size()) == count) break;
    const Vecd x = cxy - v * ct;
    if (x.norm() > radius) continue;
    lines.emplace_back(x, v);
  }
  if (static_cast<int>(lines.size()) < count)
    throw std::runtime_error("gen_bush: direction capacity exceeded for this delta/center");
  return TubeFamily(n, delta, 1, std::move(lines), seed);
}

TubeFamily gen_hairbrush(int n, double delta, const LineSegd& stem, double sigma, int count,
                         std::uint64_t seed) {
  AmbientDim check(n);
  if (stem.ambient_dim() != n) throw std::invalid_argument("gen_hairbrush: stem dimension mismatch");
  if (!(sigma >= delta && sigma <= 1)) throw std::domain_error("gen_hairbrush: sigma must lie in [delta, 1]");
  if (count < 1) throw std::domain_error("gen_hairbrush: count must be >= 1");
  const double radius = 1.0 - delta / 2;

  // Direction offsets w with delta + |w| inside [sigma/2, 2 sigma], slightly
  // shrunk so the dyadic-window recovery is immune to rounding.
  const double wlo = sigma / 2 * (1 + 1e-9) - delta;
  const double whi = sigma * 2 * (1 - 1e-9) - delta;
  std::vector<Vecd> offsets;
  for (const Vecd& w : lattice_points(n - 1, delta, std::min(whi, 2.0))) {
    const double a = w.norm();
    if (a >= std::max(wlo, 0.5 * delta) && a <= whi && (stem.v + w).norm() < 1 - 1e-12)
      offsets.push_back(w);
  }
  std::sort(offsets.begin(), offsets.end(), [](const Vecd& a, const Vecd& b) {
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na != nb) return na < nb;
    return lex_less(a, b);
  });

  // Feet ladder along the stem, delta-separated in arclength where capacity
  // allows. Feet are served round-robin, smallest t first while space near
  // the origin is still empty; each bristle consumes one direction offset.
  const double len = stem.length();
  const auto max_feet = static_cast<int>(std::floor(0.9 * len / delta)) + 1;
  const int feet = std::min(count, std::max(1, max_feet));
  Rng rng(seed);
  std::vector<double> ts(static_cast<std::size_t>(feet));
  for (int j = 0; j < feet; ++j)
    ts[static_cast<std::size_t>(j)] = feet == 1 ? 0.5 : 0.05 + 0.9 * static_cast<double>(j) / (feet - 1);

  std::vector<LineSegd> lines;
  std::vector<Vecd> positions;
  std::vector<char> offset_used(offsets.size(), 0);
  for (int round = 0; round * feet < 64 * count && static_cast<int>(lines.size()) < count;
       ++round) {
    const std::size_t start = rng.below(offsets.size());
    for (int fi = 0; fi < feet && static_cast<int>(lines.size()) < count; ++fi) {
      const double t = ts[static_cast<std::size_t>(fi)];
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const std::size_t oi = (start + k) % offsets.size();
        if (offset_used[oi]) continue;
        const Vecd x = stem.x - offsets[oi] * t;
        if (x.norm() > radius) continue;
        bool separated = true;
        for (const Vecd& s : positions)
          if ((x - s).norm() < delta) {
            separated = false;
            break;
          }
        if (!separated) continue;
        offset_used[oi] = 1;
        positions.push_back(x);
        lines.emplace_back(x, stem.v + offsets[oi]);
        break;
      }
    }
  }
  if (static_cast<int>(lines.size()) < count)
    throw std::runtime_error("gen_hairbrush: cannot place the requested bristle count");
  return TubeFamily(n, delta, 1, std::move(lines), seed);
}

TubeFamily gen_slab_family(int n, double delta, double rho, std::uint64_t seed) {
  AmbientDim check(n);
  if (!(delta <= rho && rho <= 1)) throw std::domain_error("gen_slab_family: need delta <= rho <= 1");
  const int d = n - 1;
  const double radius = 1.0 - delta / 2;

  // Directions on a delta-lattice inside a 0.7 x rho x delta x ... x delta box.
  std::vector<Vecd> dirs;
  {
    std::vector<double> half(d);
    half[0] = 0.35;
    half[1] = rho / 2;
    for (int a = 2; a < d; ++a) half[a] = delta / 2;
    std::vector<std::int64_t> reach(d), it(d);
    for (int a = 0; a < d; ++a) {
      reach[a] = static_cast<std::int64_t>(std::floor(half[a] / delta));
      it[a] = -reach[a];
    }
    Vecd v(d);
    for (;;) {
      for (int a = 0; a < d; ++a) v(a) = static_cast<double>(it[a]) * delta;
      if (v.norm() <= radius) dirs.push_back(v);
      int ax = d - 1;
      while (ax >= 0 && ++it[ax] > reach[ax]) {
        it[ax] = -reach[ax];
        --ax;
      }
      if (ax < 0) break;
    }
  }

  const Net positions = build_net(n, delta, mix64(seed ^ 0x51abfa31ULL), NetMode::MaximalRandom);
  Rng rng(seed);
  std::vector<LineSegd> lines;
  lines.reserve(dirs.size());
  for (const Vecd& v : dirs) {
    const Vecd& x = positions.points[rng.below(positions.points.size())];
    lines.emplace_back(x, v);
  }
  return TubeFamily(n, delta, 1, std::move(lines), seed);
}

namespace {

// Iterated bisection position map: a sum over quadtree levels of per-node
// offsets, so directions sharing a level-j cell stay within ~2^{-j} of each
// other in position space.
Vecd sticky_position(const Vecd& v, int levels, std::uint64_t seed, double scale) {
  const int d = static_cast<int>(v.size());
  Vecd x = Vecd::Zero(d);
  double cellsize = 1.0;
  std::uint64_t node = mix64(seed);
  for (int j = 1; j <= levels; ++j) {
    cellsize /= 2;
    std::uint64_t key = node;
    for (int a = 0; a < d; ++a) {
      const auto idx = static_cast<std::int64_t>(std::floor((v(a) + 1.0) / (2.0 * cellsize)));
      key = mix64(key ^ (static_cast<std::uint64_t>(idx) + 0x9e37ULL * static_cast<std::uint64_t>(a + 1)));
    }
    node = key;
    for (int a = 0; a < d; ++a)
      x(a) += scale * cellsize * (2.0 * mix_to_unit(key ^ (0xabcdULL * static_cast<std::uint64_t>(a + 1))) - 1.0);
  }
  return x;
}

}  // namespace

TubeFamily gen_sticky(int n, double delta, int m, std::uint64_t seed) {
  AmbientDim check(n);
  if (m < 1) throw std::domain_error("gen_sticky: m must be >= 1");
  const int d = n - 1;
  const double radius = 1.0 - delta / 2;
  const Net dirs = build_net(n, delta, 0, NetMode::Lattice);
  const int levels = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / delta))));
  const double scale = 0.7 / std::sqrt(static_cast<double>(d));

  std::vector<LineSegd> lines;
  lines.reserve(dirs.points.size() * static_cast<std::size_t>(m));
  for (const Vecd& v : dirs.points) {
    const Vecd base = sticky_position(v, levels, seed, scale);
    for (int k = 0; k < m; ++k) {
      Vecd x = snap_to_lattice(base, delta) + delta * lattice_offset(d, k);
      if (x.norm() > radius) x = snap_to_lattice(base * (radius / (base.norm() + 1e-30)), delta);
      if (x.norm() > radius) x = Vecd::Zero(d);
      lines.emplace_back(x, v);
    }
  }
  return TubeFamily(n, delta, m, std::move(lines), seed);
}

TubeFamily gen_random(int n, double delta, int m, std::uint64_t seed) {
  AmbientDim check(n);
  if (m < 1) throw std::domain_error("gen_random: m must be >= 1");
  const int d = n - 1;
  const double radius = 1.0 - delta / 2;
  const Net dirs = build_net(n, delta, 0, NetMode::Lattice);
  Rng rng(seed);

  std::vector<LineSegd> lines;
  lines.reserve(dirs.points.size() * static_cast<std::size_t>(m));
  Vecd draw(d);
  for (const Vecd& v : dirs.points) {
    std::vector<Vecd> placed;
    while (static_cast<int>(placed.size()) < m) {
      for (int a = 0; a < d; ++a) draw(a) = rng.uniform(-radius, radius);
      if (draw.norm() > radius) continue;
      const Vecd x = snap_to_lattice(draw, delta);
      if (x.norm() > radius) continue;
      bool dup = false;
      for (const Vecd& s : placed)
        if ((x - s).norm() < delta / 2) {
          dup = true;
          break;
        }
      if (dup) continue;
      placed.push_back(x);
      lines.emplace_back(x, v);
    }
  }
  return TubeFamily(n, delta, m, std::move(lines), seed);
}

GenSpec GenSpec::parse(const std::string& text) {
  std::istringstream iss(text);
  GenSpec spec;
  if (!(iss >> spec.name)) throw std::invalid_argument("GenSpec: empty spec");
  std::string token;
  while (iss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("GenSpec: expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    try {
      spec.params[key] = std::stod(token.substr(eq + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("GenSpec: bad numeric value in '" + token + "'");
    }
  }
  return spec;
}

std::string GenSpec::canonical() const {
  std::ostringstream oss;
  oss << name;
  for (const auto& [k, v] : params) {
    oss << " " << k << "=";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    oss << buf;
  }
  return oss.str();
}

double GenSpec::get(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

namespace {

void reject_unknown_keys(const GenSpec& spec, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : spec.params) {
    bool ok = false;
    for (const char* a : allowed)
      if (k == a) ok = true;
    // vector-valued keys: v0..v9, c0..c9
    if (!ok && k.size() >= 2 && (k[0] == 'v' || k[0] == 'c') &&
        k.find_first_not_of("0123456789", 1) == std::string::npos)
      ok = true;
    if (!ok) throw std::invalid_argument("GenSpec: unknown key '" + k + "' for " + spec.name);
  }
}

Vecd vector_param(const GenSpec& spec, char prefix, int size, const Vecd& fallback) {
  Vecd out = fallback;
  for (int i = 0; i < size; ++i) {
    const std::string key = std::string(1, prefix) + std::to_string(i);
    if (spec.has(key)) out(i) = spec.get(key, 0.0);
  }
  return out;
}

}  // namespace

TubeFamily make_family(const GenSpec& spec, int n, double delta, std::uint64_t seed) {
  if (spec.name == "single") {
    reject_unknown_keys(spec, {});
    return gen_single(n, delta, vector_param(spec, 'v', n - 1, Vecd::Zero(n - 1)));
  }
  if (spec.name == "bush") {
    reject_unknown_keys(spec, {"count"});
    Vecd center = Vecd::Zero(n);
    center(n - 1) = 0.5;
    center = vector_param(spec, 'c', n, center);
    return gen_bush(n, delta, center, static_cast<int>(spec.get("count", 64)), seed);
  }
  if (spec.name == "hairbrush") {
    reject_unknown_keys(spec, {"sigma", "count"});
    const LineSegd stem(Vecd::Zero(n - 1), vector_param(spec, 'v', n - 1, Vecd::Zero(n - 1)));
    return gen_hairbrush(n, delta, stem, spec.get("sigma", 0.25),
                         static_cast<int>(spec.get("count", 64)), seed);
  }
  if (spec.name == "slab_family") {
    reject_unknown_keys(spec, {"rho"});
    return gen_slab_family(n, delta, spec.get("rho", 0.25), seed);
  }
  if (spec.name == "sticky") {
    reject_unknown_keys(spec, {"m"});
    return gen_sticky(n, delta, static_cast<int>(spec.get("m", 1)), seed);
  }
  if (spec.name == "random") {
    reject_unknown_keys(spec, {"m"});
    return gen_random(n, delta, static_cast<int>(spec.get("m", 1)), seed);
  }
  throw std::invalid_argument("make_family: unknown generator '" + spec.name + "'");
}

std::function<TubeFamily(double)> family_factory(const GenSpec& spec, int n, std::uint64_t seed) {
  return [spec, n, seed](double delta) { return make_family(spec, n, delta, seed); };
}

}  // namespace tubelab

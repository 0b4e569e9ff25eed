#pragma once

#include "tubelab/family.hpp"
#include "tubelab/raster.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>

// Deterministic, seeded generators for the tube configurations the estimates
// are probed with.

namespace tubelab {

/// One tube with base position 0 and the given slope; m = 1.
TubeFamily gen_single(int n, double delta, const Vecd& v);

/// Indicator of a delta-ball at the box center, for scaling probes.
/// cell = 0 selects the default delta/2 grid.
ScalarField gen_ball(int n, double delta, double cell = 0);

/// count tubes through the common point center (in R^n, t-coordinate in
/// [0,1]), with separated directions chosen nearest the vertical first; m = 1.
TubeFamily gen_bush(int n, double delta, const Vecd& center, int count, std::uint64_t seed);

/// count bristles through points of the stem segment, at angle ~sigma from it
/// (delta + |v - v_stem| within [sigma/2, 2 sigma]); the stem itself is not
/// part of the family; m = 1.
TubeFamily gen_hairbrush(int n, double delta, const LineSegd& stem, double sigma, int count,
                         std::uint64_t seed);

/// Directions confined to a 1 x rho x delta x ... x delta box in B^{n-1},
/// positions drawn from a seeded maximal-random net; m = 1.
TubeFamily gen_slab_family(int n, double delta, double rho, std::uint64_t seed);

/// Directions on the full lattice net; positions assigned through an iterated
/// bisection map (nearby directions get nearby positions) and snapped to the
/// position lattice, so the union volume is measurably below random placement.
TubeFamily gen_sticky(int n, double delta, int m, std::uint64_t seed);

/// Directions on the full lattice net; positions uniform on the position
/// lattice, m per direction.
TubeFamily gen_random(int n, double delta, int m, std::uint64_t seed);

/// Generator spec: a name plus key=value parameters, e.g.
/// "bush count=64" or "hairbrush sigma=0.25 count=64". Used by the CLI and by
/// sweeps; see make_family for the accepted names and keys.
struct GenSpec {
  std::string name;
  std::map<std::string, double> params;

  static GenSpec parse(const std::string& text);
  std::string canonical() const;

  double get(const std::string& key, double fallback) const;
  bool has(const std::string& key) const { return params.count(key) > 0; }
};

/// Instantiates a family from a spec. Accepted specs:
///   single     [v0= v1= ...]
///   bush       [count=64] [c0= ... c{n-1}=]   (center, default box center)
///   hairbrush  [sigma=0.25] [count=64]        (vertical stem through 0)
///   slab_family [rho=0.25]
///   sticky     [m=1]
///   random     [m=1]
/// Unknown names or keys are rejected.
TubeFamily make_family(const GenSpec& spec, int n, double delta, std::uint64_t seed);

/// Factory binding (spec, n, seed), leaving delta free; used by sweeps.
std::function<TubeFamily(double)> family_factory(const GenSpec& spec, int n, std::uint64_t seed);

}  // namespace tubelab

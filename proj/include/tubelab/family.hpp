#pragma once

#include "tubelab/geom.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Delta-separated nets of directions/positions and tube families with a
// direction-multiplicity bound m.

namespace tubelab {

enum class NetMode { Lattice, MaximalRandom };

/// Finite delta-separated subset of B^{d}(0,1), d = n-1.
struct Net {
  double delta = 0;
  std::vector<Vecd> points;

  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
};

/// Builds a delta-separated net in B^{n-1}(0,1). Points are kept within radius
/// 1 - delta/2 so that every tube built from them stays inside the ambient box.
/// Lattice mode is a cubic lattice of spacing delta; maximal-random mode is
/// greedy Poisson-disk sampling run to saturation, deterministic under seed.
Net build_net(int n, double delta, std::uint64_t seed, NetMode mode);

/// Collection of line segments with directions from a net E and positions from
/// a net E', subject to |{l : v(l) = v}| <= m for every direction v.
struct TubeFamily {
  int n = 0;
  double delta = 0;
  int m = 1;  // declared direction-multiplicity bound
  std::vector<LineSegd> lines;
  std::uint64_t seed = 0;  // generator seed, carried for provenance

  TubeFamily() = default;
  TubeFamily(int n_, double delta_, int m_, std::vector<LineSegd> lines_, std::uint64_t seed_ = 0);

  std::int64_t size() const { return static_cast<std::int64_t>(lines.size()); }
  Tubed tube(std::int64_t i) const { return Tubed(lines[static_cast<std::size_t>(i)], delta); }
};

/// Validation report: realized multiplicity and net-separation diagnostics.
struct FamilyReport {
  int max_multiplicity = 0;       // realized max over directions
  std::int64_t direction_separation_violations = 0;
  std::int64_t position_separation_violations = 0;
  bool multiplicity_ok = false;   // realized <= declared m
  bool valid() const {
    return multiplicity_ok && direction_separation_violations == 0 &&
           position_separation_violations == 0;
  }
};

/// Checks the family invariants: per-direction multiplicity against the
/// declared m, and delta-separation of the distinct direction and position
/// values (distinct up to bit equality; separation tested with 1e-12 slack).
FamilyReport validate_family(const TubeFamily& f);

struct ScalarField;  // raster.hpp

/// Density and multiplicity statistics of a family against a target set E,
/// mirroring the identity mu |E| = lambda_raw delta^{n-1} |A|.
///
/// lambda is the mass-weighted mean normalized tube density
///   sum_l |T_l cap E| / sum_l (c_n delta^{n-1} len(l)),
/// with c_n the unit (n-1)-ball volume, so lambda is ~1 when E covers the
/// tubes. norm_total stores sum_l c_n delta^{n-1} len(l); with it the identity
///   mu * set_measure = lambda * norm_total
/// holds exactly at the voxel level.
struct DensityStats {
  double lambda = 0;
  double mu = 0;
  double set_measure = 0;
  double norm_total = 0;
  std::int64_t family_size = 0;

  /// Relative residual of the consistency identity (0 up to rounding).
  double consistency_residual() const;
};

/// Computes DensityStats of f against the 0/1 indicator field of E (which must
/// live on a grid with cell <= f.delta). Throws on an empty target set.
DensityStats density_stats(const TubeFamily& f, const ScalarField& field);

/// Subfamily of lines whose voxel mass |T_l cap E| lies within a factor
/// 2^{+-tolerance_dyadic} of lambda_target * delta^{n-1}. May return an empty
/// family.
TubeFamily refine_by_density(const TubeFamily& f, const ScalarField& field, double lambda_target,
                             int tolerance_dyadic);

}  // namespace tubelab

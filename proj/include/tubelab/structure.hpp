#pragma once

#include "tubelab/estimate.hpp"
#include "tubelab/family.hpp"
#include "tubelab/geom.hpp"
#include "tubelab/raster.hpp"

#include <cstdint>
#include <functional>
#include <vector>

// Structural functionals of tube families: plate number, dyadic
// (multiplicity, angle) decomposition, hairbrush extraction, two-ends
// checking, bilinear direction splitting, L^2 incidence verification, and
// slab-mass search.

namespace tubelab {

/// Cells of T_l cap E whose total multiplicity sits at dyadic level mu and
/// whose dominant incidence angle sits at level sigma.
struct DyadicBin {
  LineSegd line;
  int mu = 1;        // power of two
  double sigma = 0;  // delta times a power of two
  std::vector<std::int64_t> cells;
};

/// Certified lower bound for the plate number, with its witness box.
struct PlateResult {
  double value = 0;
  OrientedBoxd witness;
  double w = 0;
  std::int64_t count = 0;
};

struct PlateSearchOptions {
  double box_constant = 4.0;  // C in the C x Cw x Cdelta x ... plate shape
  std::int64_t max_pairs = 2000;
  int refine_iters = 3;
  std::uint64_t seed = 0;
};

/// Lower-bound search for the plate number sup_R |{l : T_l in R}| / (w/delta):
/// candidate plates are seeded from single tubes (w = delta) and tube pairs,
/// then locally refined. Deterministic under seed.
PlateResult plate_number(const TubeFamily& f, const PlateSearchOptions& opts = {});

/// Recomputes the value of a witness box: contained-tube count over w/delta.
double plate_value(const TubeFamily& f, const OrientedBoxd& box, double w,
                   std::int64_t* count_out = nullptr);

/// Partitions the occupied cells of T_l cap E by dyadic multiplicity level and
/// dominant dyadic angle level (smallest sigma whose angle-restricted
/// multiplicity reaches half the total). The bins cover T_l cap E exactly.
std::vector<DyadicBin> dyadic_decompose(const LineSegd& l, const TubeFamily& f,
                                        const ScalarField& E_field);

/// Tubes of f meeting T_{l0} (segment distance <= 2 delta, exact test) whose
/// angle from l0 satisfies delta + |v - v0| in sigma * [2^-slack, 2^slack].
TubeFamily hairbrush(const TubeFamily& f, const LineSegd& l0, double sigma, int slack_dyadic);

struct TwoEndsParams {
  int N = 10;
  double epsilon = 0.1;
  // Polylog slack kappa * max(1, log2(1/delta))^nu multiplying the bound.
  double slack_kappa = 2.0;
  double slack_nu = 0.0;
};

/// True iff no ball of radius delta^{1/N} centered on the tube axis captures
/// more than delta^{eps/2N} * lambda * c_n * delta^{n-1} * slack of E's mass
/// on the tube. Ball centers march along the axis at spacing delta^{1/N}/2.
bool two_ends_check(const Tubed& t, const ScalarField& E_field, const TwoEndsParams& params,
                    double lambda);

struct BilinearSplit {
  TubeFamily first, second;
  double norm = 0;         // || (sum_1 chi)(sum_2 chi) ||_{p'/2}^{1/2}
  Vecd center_first, center_second;  // direction-cell centers
};

/// Covers the direction set by lattice cells of size c0/4 and returns, among
/// cell pairs separated by at least c0/2, the pair maximizing the bilinear
/// norm on the given grid. Throws "no separated pair" when all directions are
/// within one c0/2 ball.
BilinearSplit bilinear_split(const TubeFamily& f, double c0, const ExponentProfile& profile,
                             const GridSpec& spec, std::int64_t budget = kDefaultCellBudget);

struct CordobaResult {
  double measured_l2_sq = 0;   // || sum chi ||_2^2 on the grid
  double incidence_bound = 0;  // sum over ordered pairs of the analytic bound
};

/// Cordoba's L^2 computation: the measured squared norm expands exactly into
/// pairwise intersection measures, each dominated by the analytic bound.
/// restrict_to, when set, confines the tubes to a region before measuring.
CordobaResult cordoba_l2(const TubeFamily& f,
                         const std::function<bool(const Vecd&)>& restrict_to = {},
                         const GridSpec* spec = nullptr,
                         std::int64_t budget = kDefaultCellBudget);

/// Voxel measure of {field > 0} weighted mass inside the slab.
double slab_mass(const ScalarField& E_field, const Slabd& s);

struct SlabSearchResult {
  Slabd slab;
  double theta = 0;
  double mass = 0;
};

struct SlabSearchOptions {
  std::int64_t max_pairs = 128;
  std::uint64_t seed = 0;
};

/// Searches slabs spanned by tube-pair directions (and position offsets, for
/// near-parallel pairs) over the dyadic theta list, maximizing mass/sqrt(theta).
/// Deterministic under seed.
SlabSearchResult best_slab_search(const ScalarField& E_field, const std::vector<double>& thetas,
                                  const TubeFamily& candidates_from,
                                  const SlabSearchOptions& opts = {});

}  // namespace tubelab

#pragma once

#include "tubelab/family.hpp"
#include "tubelab/raster.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

// Exponent bookkeeping and the central estimate: the L^{p'} norm of the
// multiplicity function against delta^{-n/p+1-eps} m^{1/q-1/r} (delta^{n-1}|A|)^{1/q'}.

namespace tubelab {

/// Exact rational number extended with +infinity, used so that conjugate and
/// admissibility identities hold without rounding.
class Rat {
 public:
  Rat() = default;
  Rat(long long n) : num_(n), den_(1) {}
  Rat(long long n, long long d);

  static Rat infinity() {
    Rat r;
    r.num_ = 1;
    r.den_ = 0;
    return r;
  }

  bool is_infinite() const { return den_ == 0; }
  long long num() const { return num_; }
  long long den() const { return den_; }
  double value() const;
  std::string str() const;

  Rat operator+(const Rat& o) const;
  Rat operator-(const Rat& o) const;
  Rat operator*(const Rat& o) const;
  Rat operator/(const Rat& o) const;
  Rat inv() const;

  bool operator==(const Rat& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const;
  bool operator<=(const Rat& o) const { return *this < o || *this == o; }
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator>=(const Rat& o) const { return o <= *this; }

 private:
  long long num_ = 0;
  long long den_ = 1;
  void normalize();
};

/// Hoelder conjugate p/(p-1); conjugate(1) = infinity, conjugate(infinity) = 1.
Rat conjugate(const Rat& p);

/// Exponent tuple (p, q, r, alpha) with exact conjugates.
struct ExponentProfile {
  Rat p, q, r, alpha;

  Rat pprime() const { return conjugate(p); }
  Rat qprime() const { return conjugate(q); }
};

/// The profile p = (n+2)/2, q = (n-1)(n+2)/n, r = 2(n+2),
/// alpha = (n-3)/(2(n+2)); epsilon is carried separately.
ExponentProfile squid_profile(int n);

/// Necessary-condition checks, evaluated in exact rational arithmetic.
struct Admissibility {
  bool scaling_ok = false;      // 1 + (n-1)/r >= n/p - alpha
  bool knapp_ok = false;        // (n-1)/q + (n-1)/r >= (n-1)/p - alpha
  bool besicovitch_ok = false;  // (r, alpha) != (infinity, 0)
  bool scaling_equality = false;
  bool knapp_equality = false;
};

Admissibility admissible(const ExponentProfile& profile, int n);

/// delta^{-n/p + 1 - eps} * m^{1/q - 1/r} * (delta^{n-1} |A|)^{1/q'}.
double rhs_bound(int n, double delta, int m, std::int64_t family_size, double epsilon,
                 const ExponentProfile& profile);

struct SweepPoint {
  double delta = 0, lhs = 0, rhs = 0, ratio = 0;
};

/// Result of one evaluation or a delta-sweep; every parameter needed to
/// reproduce the run is carried along.
struct EstimateReport {
  double lhs = 0, rhs = 0, ratio = 0;
  int n = 0;
  double delta = 0;
  double cell = 0;
  int m_declared = 0;
  int m_realized = 0;
  std::int64_t family_size = 0;
  double epsilon = 0;
  std::uint64_t seed = 0;
  ExponentProfile profile;
  std::string spec_text;  // generator spec, when the family came from one

  std::vector<SweepPoint> sweep;
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool partial = false;  // a sweep evaluation failed; points up to it are kept
  bool budget_refused = false;
  std::string partial_reason;
};

struct EvalOptions {
  double cell = 0;  // 0: default delta/2
  std::int64_t budget = kDefaultCellBudget;
};

/// Validates the family, rasterizes its multiplicity function and evaluates
/// lhs = ||sum chi||_{p'}, rhs with m = realized max direction multiplicity.
EstimateReport evaluate(const TubeFamily& f, const ExponentProfile& profile, double epsilon,
                        const EvalOptions& opts = {});

/// Runs evaluate over a descending list of dyadic deltas, generating each
/// family with make(delta), and fits the slope of log(ratio) against
/// log(1/delta). A failing evaluation flags the report partial and keeps the
/// points gathered so far.
EstimateReport sweep(const std::function<TubeFamily(double)>& make,
                     const std::vector<double>& deltas, const ExponentProfile& profile,
                     double epsilon = 0, const EvalOptions& opts = {});

}  // namespace tubelab

#include "tubelab/estimate.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace tubelab {

namespace {

long long safe_ll(__int128 v) {
  if (v > std::numeric_limits<long long>::max() || v < std::numeric_limits<long long>::min())
    throw std::overflow_error("Rat: overflow");
  return static_cast<long long>(v);
}

}  // namespace

Rat::Rat(long long n, long long d) : num_(n), den_(d) {
  if (d == 0) throw std::domain_error("Rat: zero denominator (use Rat::infinity)");
  normalize();
}

void Rat::normalize() {
  if (den_ == 0) {
    num_ = 1;
    return;
  }
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const long long g = std::gcd(num_ < 0 ? -num_ : num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

double Rat::value() const {
  if (is_infinite()) return std::numeric_limits<double>::infinity();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

std::string Rat::str() const {
  if (is_infinite()) return "inf";
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rat Rat::operator+(const Rat& o) const {
  if (is_infinite() || o.is_infinite()) return infinity();
  Rat r;
  r.num_ = safe_ll(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_);
  r.den_ = safe_ll(static_cast<__int128>(den_) * o.den_);
  r.normalize();
  return r;
}

Rat Rat::operator-(const Rat& o) const {
  if (o.is_infinite()) throw std::domain_error("Rat: cannot subtract infinity");
  if (is_infinite()) return infinity();
  Rat neg(-o.num_, o.den_);
  return *this + neg;
}

Rat Rat::operator*(const Rat& o) const {
  if (is_infinite() || o.is_infinite()) {
    if (num_ == 0 || o.num_ == 0) throw std::domain_error("Rat: 0 * infinity");
    return infinity();
  }
  Rat r;
  r.num_ = safe_ll(static_cast<__int128>(num_) * o.num_);
  r.den_ = safe_ll(static_cast<__int128>(den_) * o.den_);
  r.normalize();
  return r;
}

Rat Rat::operator/(const Rat& o) const { return *this * o.inv(); }

Rat Rat::inv() const {
  if (is_infinite()) return Rat(0);
  if (num_ == 0) return infinity();
  Rat r;
  r.num_ = den_;
  r.den_ = num_;
  r.normalize();
  return r;
}

bool Rat::operator<(const Rat& o) const {
  if (is_infinite()) return false;
  if (o.is_infinite()) return true;
  return static_cast<__int128>(num_) * o.den_ < static_cast<__int128>(o.num_) * den_;
}

Rat conjugate(const Rat& p) {
  if (p.is_infinite()) return Rat(1);
  if (p == Rat(1)) return Rat::infinity();
  if (p < Rat(1)) throw std::domain_error("conjugate: exponent must be >= 1");
  return p / (p - Rat(1));
}

ExponentProfile squid_profile(int n) {
  if (n < 3) throw std::domain_error("squid_profile: n must be >= 3");
  ExponentProfile prof;
  prof.p = Rat(n + 2, 2);
  prof.q = Rat(static_cast<long long>(n - 1) * (n + 2), n);
  prof.r = Rat(2 * (n + 2));
  prof.alpha = Rat(n - 3, 2 * (n + 2));
  return prof;
}

Admissibility admissible(const ExponentProfile& profile, int n) {
  AmbientDim check(n);
  const Rat n1(n - 1);
  const Rat inv_r = profile.r.is_infinite() ? Rat(0) : profile.r.inv();
  const Rat inv_q = profile.q.is_infinite() ? Rat(0) : profile.q.inv();
  const Rat inv_p = profile.p.is_infinite() ? Rat(0) : profile.p.inv();

  Admissibility adm;
  const Rat scaling_lhs = Rat(1) + n1 * inv_r;
  const Rat scaling_rhs = Rat(n) * inv_p - profile.alpha;
  adm.scaling_ok = scaling_lhs >= scaling_rhs;
  adm.scaling_equality = scaling_lhs == scaling_rhs;

  const Rat knapp_lhs = n1 * inv_q + n1 * inv_r;
  const Rat knapp_rhs = n1 * inv_p - profile.alpha;
  adm.knapp_ok = knapp_lhs >= knapp_rhs;
  adm.knapp_equality = knapp_lhs == knapp_rhs;

  adm.besicovitch_ok = !(profile.r.is_infinite() && profile.alpha == Rat(0));
  return adm;
}

double rhs_bound(int n, double delta, int m, std::int64_t family_size, double epsilon,
                 const ExponentProfile& profile) {
  if (!(delta > 0 && delta < 1)) throw std::domain_error("rhs_bound: delta must lie in (0,1)");
  if (m < 1) throw std::domain_error("rhs_bound: m must be >= 1");
  if (family_size < 1) throw std::domain_error("rhs_bound: family size must be >= 1");
  const double inv_p = profile.p.is_infinite() ? 0.0 : 1.0 / profile.p.value();
  const double inv_q = profile.q.is_infinite() ? 0.0 : 1.0 / profile.q.value();
  const double inv_r = profile.r.is_infinite() ? 0.0 : 1.0 / profile.r.value();
  const double inv_qp = profile.qprime().is_infinite() ? 0.0 : 1.0 / profile.qprime().value();
  return std::pow(delta, -static_cast<double>(n) * inv_p + 1.0 - epsilon) *
         std::pow(static_cast<double>(m), inv_q - inv_r) *
         std::pow(std::pow(delta, n - 1) * static_cast<double>(family_size), inv_qp);
}

EstimateReport evaluate(const TubeFamily& f, const ExponentProfile& profile, double epsilon,
                        const EvalOptions& opts) {
  const FamilyReport rep = validate_family(f);
  if (f.lines.empty()) throw std::invalid_argument("evaluate: empty family");
  if (!rep.valid()) {
    std::ostringstream oss;
    oss << "evaluate: family fails validation (max multiplicity " << rep.max_multiplicity
        << " vs declared m " << f.m << ", " << rep.direction_separation_violations
        << " direction and " << rep.position_separation_violations
        << " position separation violations)";
    throw std::invalid_argument(oss.str());
  }
  const double cell = opts.cell > 0 ? opts.cell : f.delta / 2;
  const GridSpec spec = GridSpec::standard(f.n, cell);
  const ScalarField field = multiplicity_field(f, spec, opts.budget);

  EstimateReport out;
  out.n = f.n;
  out.delta = f.delta;
  out.cell = cell;
  out.m_declared = f.m;
  out.m_realized = rep.max_multiplicity;
  out.family_size = f.size();
  out.epsilon = epsilon;
  out.seed = f.seed;
  out.profile = profile;
  out.lhs = lp_norm(field, profile.pprime().value());
  out.rhs = rhs_bound(f.n, f.delta, rep.max_multiplicity, f.size(), epsilon, profile);
  out.ratio = out.lhs / out.rhs;
  return out;
}

EstimateReport sweep(const std::function<TubeFamily(double)>& make,
                     const std::vector<double>& deltas, const ExponentProfile& profile,
                     double epsilon, const EvalOptions& opts) {
  if (deltas.size() < 2) throw std::invalid_argument("sweep: need at least 2 deltas");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double k = -std::log2(deltas[i]);
    if (std::abs(k - std::round(k)) > 1e-9)
      throw std::domain_error("sweep: deltas must be dyadic (powers of 2)");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw std::domain_error("sweep: deltas must be strictly descending");
  }

  EstimateReport agg;
  agg.profile = profile;
  agg.epsilon = epsilon;
  for (double delta : deltas) {
    try {
      const TubeFamily fam = make(delta);
      const EstimateReport rep = evaluate(fam, profile, epsilon, opts);
      agg.sweep.push_back({delta, rep.lhs, rep.rhs, rep.ratio});
      agg.lhs = rep.lhs;
      agg.rhs = rep.rhs;
      agg.ratio = rep.ratio;
      agg.n = rep.n;
      agg.delta = rep.delta;
      agg.cell = rep.cell;
      agg.m_declared = rep.m_declared;
      agg.m_realized = rep.m_realized;
      agg.family_size = rep.family_size;
      agg.seed = rep.seed;
    } catch (const BudgetError& e) {
      agg.partial = true;
      agg.budget_refused = true;
      agg.partial_reason = e.what();
      break;
    } catch (const std::exception& e) {
      agg.partial = true;
      agg.partial_reason = e.what();
      break;
    }
  }
  if (agg.sweep.size() >= 2) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(agg.sweep.size());
    for (const SweepPoint& sp : agg.sweep) pts.emplace_back(1.0 / sp.delta, sp.ratio);
    agg.slope = fit_loglog_slope(pts);
  }
  return agg;
}

}  // namespace tubelab

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

// Geometry of line segments, delta-tubes, oriented boxes and slabs in R^n,
// n >= 3. Points are parameterized as (y, t) with y in R^{n-1} and t in [0,1];
// a segment is {(x + v t, t) : t in [0,1]} for base x and slope v, both in the
// open unit ball of R^{n-1}.

namespace tubelab {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vecd = Vec<double>;
using Matd = Mat<double>;

/// Ambient dimension; valid values are n >= 3.
struct AmbientDim {
  int n;
  explicit AmbientDim(int n_) : n(n_) {
    if (n < 3) throw std::domain_error("ambient dimension must be >= 3, got " + std::to_string(n));
  }
};

/// Volume of the unit ball in R^k (k >= 0).
inline double unit_ball_volume(int k) {
  if (k < 0) throw std::domain_error("unit_ball_volume: negative dimension");
  return std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

/// Line segment {(x + v t, t) : t in [0,1]} with x, v in B^{n-1}(0,1).
template <typename Scalar>
struct LineSeg {
  Vec<Scalar> x;  // base position in R^{n-1}
  Vec<Scalar> v;  // slope in R^{n-1}

  LineSeg() = default;
  LineSeg(Vec<Scalar> x_, Vec<Scalar> v_) : x(std::move(x_)), v(std::move(v_)) {
    if (x.size() != v.size()) throw std::invalid_argument("LineSeg: x and v must have equal dimension");
    if (x.size() < 2) throw std::invalid_argument("LineSeg: ambient dimension must be >= 3");
    if (x.norm() >= Scalar(1)) throw std::invalid_argument("LineSeg: |x| must be < 1");
    if (v.norm() >= Scalar(1)) throw std::invalid_argument("LineSeg: |v| must be < 1");
  }

  int ambient_dim() const { return static_cast<int>(x.size()) + 1; }

  /// Arclength of the segment, sqrt(1 + |v|^2).
  Scalar length() const { return std::sqrt(Scalar(1) + v.squaredNorm()); }

  /// Endpoint at t = 0, as a point of R^n.
  Vec<Scalar> tail() const {
    Vec<Scalar> p(ambient_dim());
    p.head(x.size()) = x;
    p(x.size()) = Scalar(0);
    return p;
  }

  /// Endpoint at t = 1.
  Vec<Scalar> head() const {
    Vec<Scalar> p(ambient_dim());
    p.head(x.size()) = x + v;
    p(x.size()) = Scalar(1);
    return p;
  }
};

using LineSegd = LineSeg<double>;

/// Point on the segment at parameter t in [0,1].
template <typename Scalar>
Vec<Scalar> point_at(const LineSeg<Scalar>& l, Scalar t) {
  if (!(t >= Scalar(0) && t <= Scalar(1)))
    throw std::domain_error("point_at: t must lie in [0,1]");
  Vec<Scalar> p(l.ambient_dim());
  p.head(l.x.size()) = l.x + l.v * t;
  p(l.x.size()) = t;
  return p;
}

/// Angle proxy between two segments: |v(l1) - v(l2)|. This is the quantity the
/// estimates are phrased in; it differs from the true angle between tangents by
/// a bounded factor since |v| < 1.
template <typename Scalar>
Scalar angle(const LineSeg<Scalar>& l1, const LineSeg<Scalar>& l2) {
  return (l1.v - l2.v).norm();
}

/// Distance from a point of R^n to the closed segment (clamped projection).
template <typename Scalar, typename Derived>
Scalar point_segment_distance(const Eigen::MatrixBase<Derived>& p, const LineSeg<Scalar>& l) {
  const int d = static_cast<int>(l.x.size());
  if (p.size() != d + 1) throw std::invalid_argument("point_segment_distance: dimension mismatch");
  // Segment a + u*(v,1), u in [0,1], with a = (x, 0).
  Scalar num = p(d);
  for (int i = 0; i < d; ++i) num += (p(i) - l.x(i)) * l.v(i);
  const Scalar dd = Scalar(1) + l.v.squaredNorm();
  Scalar u = num / dd;
  u = std::clamp(u, Scalar(0), Scalar(1));
  Scalar dist2 = (p(d) - u) * (p(d) - u);
  for (int i = 0; i < d; ++i) {
    const Scalar r = p(i) - (l.x(i) + l.v(i) * u);
    dist2 += r * r;
  }
  return std::sqrt(dist2);
}

/// Minimal distance between two closed segments.
template <typename Scalar>
Scalar segment_distance(const LineSeg<Scalar>& l1, const LineSeg<Scalar>& l2) {
  // Quadratic minimization of |a1 + s d1 - a2 - u d2|^2 over [0,1]^2, with the
  // unconstrained solution clamped and re-minimized along each active edge.
  const Vec<Scalar> a1 = l1.tail(), d1 = l1.head() - l1.tail();
  const Vec<Scalar> a2 = l2.tail(), d2 = l2.head() - l2.tail();
  const Vec<Scalar> r = a1 - a2;
  const Scalar A = d1.squaredNorm();
  const Scalar B = d1.dot(d2);
  const Scalar C = d2.squaredNorm();
  const Scalar D = d1.dot(r);
  const Scalar E = d2.dot(r);
  const Scalar det = A * C - B * B;

  Scalar s, u;
  if (det > Scalar(1e-14) * A * C) {
    s = std::clamp((B * E - C * D) / det, Scalar(0), Scalar(1));
  } else {
    s = Scalar(0);  // near-parallel: pick an end and let the edge pass fix u
  }
  u = (C > Scalar(0)) ? std::clamp((B * s + E) / C, Scalar(0), Scalar(1)) : Scalar(0);
  s = (A > Scalar(0)) ? std::clamp((B * u - D) / A, Scalar(0), Scalar(1)) : Scalar(0);

  auto eval = [&](Scalar ss, Scalar uu) { return (r + ss * d1 - uu * d2).norm(); };
  Scalar best = eval(s, u);
  // Edge sweep guards the clamped stationary point in degenerate configurations.
  for (Scalar ss : {Scalar(0), Scalar(1)}) {
    const Scalar uu = (C > Scalar(0)) ? std::clamp((B * ss + E) / C, Scalar(0), Scalar(1)) : Scalar(0);
    best = std::min(best, eval(ss, uu));
  }
  for (Scalar uu : {Scalar(0), Scalar(1)}) {
    const Scalar ss = (A > Scalar(0)) ? std::clamp((B * uu - D) / A, Scalar(0), Scalar(1)) : Scalar(0);
    best = std::min(best, eval(ss, uu));
  }
  return best;
}

/// Closed delta-neighbourhood of a line segment: a delta x 1 tube.
template <typename Scalar>
struct Tube {
  LineSeg<Scalar> line;
  Scalar delta;

  Tube() = default;
  Tube(LineSeg<Scalar> l, Scalar delta_) : line(std::move(l)), delta(delta_) {
    if (!(delta > Scalar(0) && delta < Scalar(1)))
      throw std::invalid_argument("Tube: delta must lie in (0,1)");
  }
};

using Tubed = Tube<double>;

/// Membership in the closed tube: distance to the segment <= delta.
template <typename Scalar, typename Derived>
bool tube_contains(const Tube<Scalar>& t, const Eigen::MatrixBase<Derived>& p) {
  return point_segment_distance(p, t.line) <= t.delta;
}

/// Two closed delta-tubes of equal radius intersect iff their segments come
/// within 2*delta of each other.
template <typename Scalar>
bool tubes_intersect(const Tube<Scalar>& t1, const Tube<Scalar>& t2) {
  return segment_distance(t1.line, t2.line) <= t1.delta + t2.delta;
}

namespace detail {
// Intersection-volume constant for two transverse unit cylinders of radius 1
// at angle tau: |C1 cap C2| = c_n / sin(tau) after rescaling. The analytic
// value is 8 V_{n-2} / n with V_k the unit-ball volume.
inline double transverse_cylinder_constant(int n) { return 8.0 * unit_ball_volume(n - 2) / n; }
}  // namespace detail

/// Constant c_n in the intersection surrogate c_n delta^n / (delta + angle).
/// n = 3 carries a value calibrated once against voxel counts of transverse
/// finite tubes, chosen so measured/bound stays within a narrow window around
/// 1 across dyadic angles; other dimensions use the analytic
/// transverse-cylinder constant.
inline double intersection_bound_constant(int n) {
  if (n < 3) throw std::domain_error("intersection_bound_constant: n must be >= 3");
  if (n == 3) return 6.0;  // calibrated, see tests
  return detail::transverse_cylinder_constant(n);
}

/// Analytic over-estimate of |T_{l1} cap T_{l2}| for two delta-tubes:
/// c_n delta^n / (delta + |v(l1) - v(l2)|).
template <typename Scalar>
Scalar tube_intersection_bound(const LineSeg<Scalar>& l1, const LineSeg<Scalar>& l2, Scalar delta) {
  if (!(delta > Scalar(0))) throw std::invalid_argument("tube_intersection_bound: delta must be > 0");
  const int n = l1.ambient_dim();
  const Scalar c = Scalar(intersection_bound_constant(n));
  return c * std::pow(delta, Scalar(n)) / (delta + angle(l1, l2));
}

/// Axis-aligned-in-its-own-frame rectangular box: center, orthonormal axes
/// (columns), and per-axis half lengths.
template <typename Scalar>
struct OrientedBox {
  Vec<Scalar> center;
  Mat<Scalar> axes;          // n x n, orthonormal columns
  Vec<Scalar> half_lengths;  // positive

  OrientedBox() = default;
  OrientedBox(Vec<Scalar> c, Mat<Scalar> ax, Vec<Scalar> hl)
      : center(std::move(c)), axes(std::move(ax)), half_lengths(std::move(hl)) {
    const int n = static_cast<int>(center.size());
    if (axes.rows() != n || axes.cols() != n || half_lengths.size() != n)
      throw std::invalid_argument("OrientedBox: inconsistent dimensions");
    if ((axes.transpose() * axes - Mat<Scalar>::Identity(n, n)).template lpNorm<Eigen::Infinity>() > Scalar(1e-12))
      throw std::invalid_argument("OrientedBox: axes must be orthonormal (tol 1e-12)");
    if (!(half_lengths.minCoeff() > Scalar(0)))
      throw std::invalid_argument("OrientedBox: half lengths must be positive");
  }

  int dim() const { return static_cast<int>(center.size()); }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& p) const {
    const Vec<Scalar> w = axes.transpose() * (p - center);
    return (w.cwiseAbs().array() <= half_lengths.array()).all();
  }
};

using OrientedBoxd = OrientedBox<double>;

/// Containment certificate for "T_l inside R": both segment endpoints lie in R
/// shrunk by delta along every axis. Conservative; a box thinner than 2*delta
/// in some axis simply never certifies.
template <typename Scalar>
bool box_contains_tube(const OrientedBox<Scalar>& r, const Tube<Scalar>& t) {
  const Vec<Scalar> margin = r.half_lengths.array() - t.delta;
  if (!(margin.minCoeff() > Scalar(0))) return false;
  for (const Vec<Scalar>& e : {t.line.tail(), t.line.head()}) {
    const Vec<Scalar> w = r.axes.transpose() * (e - r.center);
    if (!((w.cwiseAbs().array() <= margin.array()).all())) return false;
  }
  return true;
}

/// theta/2-neighbourhood of a 2-plane: the plane through plane_point orthogonal
/// to the n-2 columns of normal_basis.
template <typename Scalar>
struct Slab {
  Vec<Scalar> plane_point;
  Mat<Scalar> normal_basis;  // n x (n-2), orthonormal columns
  Scalar theta;

  Slab() = default;
  Slab(Vec<Scalar> p, Mat<Scalar> nb, Scalar theta_)
      : plane_point(std::move(p)), normal_basis(std::move(nb)), theta(theta_) {
    const int n = static_cast<int>(plane_point.size());
    if (normal_basis.rows() != n || normal_basis.cols() != n - 2)
      throw std::invalid_argument("Slab: normal basis must have n-2 columns");
    if ((normal_basis.transpose() * normal_basis - Mat<Scalar>::Identity(n - 2, n - 2))
            .template lpNorm<Eigen::Infinity>() > Scalar(1e-12))
      throw std::invalid_argument("Slab: normal basis must be orthonormal (tol 1e-12)");
    if (!(theta > Scalar(0))) throw std::invalid_argument("Slab: theta must be positive");
  }

  int dim() const { return static_cast<int>(plane_point.size()); }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& p) const {
    return (normal_basis.transpose() * (p - plane_point)).norm() <= theta / Scalar(2);
  }
};

using Slabd = Slab<double>;

/// Orthonormal completion: returns an n x n orthonormal matrix whose first
/// k columns span the same space as the (independent) columns of partial.
template <typename Scalar>
Mat<Scalar> complete_basis(const Mat<Scalar>& partial) {
  const int n = static_cast<int>(partial.rows());
  const int k = static_cast<int>(partial.cols());
  Eigen::HouseholderQR<Mat<Scalar>> qr(partial);
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, n);
  // Align the leading columns with the inputs (QR may flip signs).
  for (int j = 0; j < k; ++j)
    if (q.col(j).dot(partial.col(j)) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

/// Full 3D..nD direction of a segment, unit length: (v, 1)/sqrt(1+|v|^2).
template <typename Scalar>
Vec<Scalar> direction(const LineSeg<Scalar>& l) {
  Vec<Scalar> d(l.ambient_dim());
  d.head(l.x.size()) = l.v;
  d(l.x.size()) = Scalar(1);
  d /= d.norm();
  return d;
}

/// Midpoint of a segment in R^n.
template <typename Scalar>
Vec<Scalar> midpoint(const LineSeg<Scalar>& l) {
  return point_at(l, Scalar(0.5));
}

}  // namespace tubelab

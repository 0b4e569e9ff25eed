#pragma once

#include "tubelab/estimate.hpp"
#include "tubelab/family.hpp"
#include "tubelab/raster.hpp"
#include "tubelab/structure.hpp"

#include <json.hpp>

#include <string>

// File formats: the plain-text family format, binary field snapshots, JSON
// reports with witness serialization, and CSV/gnuplot sweep tables. All writes
// are atomic (temp file + rename).

namespace tubelab {

void atomic_write_text(const std::string& path, const std::string& content);
void atomic_write_bytes(const std::string& path, const std::string& bytes);

/// Family format, one record per line segment:
///   # tubelab family v1
///   # n=<n> delta=<delta> m=<m> seed=<seed>
///   x0,...,x{n-2},v0,...,v{n-2}
///   <comma-separated doubles, %.17g>
void write_family(const std::string& path, const TubeFamily& f);
TubeFamily read_family(const std::string& path);

/// Binary field snapshot: magic "TLFIELD1", then int64 n, f64 cell,
/// f64 lo[n], f64 hi[n], int64 dims[n], then the flat value array as
/// little-endian 64-bit floats.
void write_field(const std::string& path, const ScalarField& field);
ScalarField read_field(const std::string& path);

nlohmann::ordered_json profile_json(const ExponentProfile& p);
nlohmann::ordered_json box_json(const OrientedBoxd& b);
nlohmann::ordered_json slab_json(const Slabd& s);

/// Report keys: lhs, rhs, ratio, slope, partial, params (n, delta, cell,
/// m_declared, m_realized, family_size, epsilon, seed, spec, profile), sweep.
nlohmann::ordered_json report_json(const EstimateReport& r);

/// CSV sweep table with columns delta,lhs,rhs,ratio.
std::string sweep_csv(const EstimateReport& r);
/// Same data, gnuplot-style whitespace-separated with a comment header.
std::string sweep_dat(const EstimateReport& r);

std::string format_double(double v);  // %.17g

}  // namespace tubelab

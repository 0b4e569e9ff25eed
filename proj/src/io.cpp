#include "tubelab/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tubelab {

namespace {

void rename_or_throw(const std::string& tmp, const std::string& path) {
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot move temporary file onto " + path);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("bad numeric field '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  atomic_write_bytes(path, content);
}

void atomic_write_bytes(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed on " + tmp);
  }
  rename_or_throw(tmp, path);
}

void write_family(const std::string& path, const TubeFamily& f) {
  std::ostringstream oss;
  oss << "# tubelab family v1\n";
  oss << "# n=" << f.n << " delta=" << format_double(f.delta) << " m=" << f.m
      << " seed=" << f.seed << "\n";
  const int d = f.n - 1;
  for (int i = 0; i < d; ++i) oss << "x" << i << ",";
  for (int i = 0; i < d; ++i) oss << "v" << i << (i + 1 < d ? "," : "\n");
  for (const LineSegd& l : f.lines) {
    for (int i = 0; i < d; ++i) oss << format_double(l.x(i)) << ",";
    for (int i = 0; i < d; ++i) oss << format_double(l.v(i)) << (i + 1 < d ? "," : "\n");
  }
  atomic_write_text(path, oss.str());
}

TubeFamily read_family(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open family file " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# tubelab family v1")
    throw std::runtime_error(path + ": not a tubelab family file");
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error(path + ": missing parameter header");

  int n = 0, m = 0;
  double delta = 0;
  std::uint64_t seed = 0;
  {
    std::istringstream hdr(line.substr(2));
    std::string tok;
    while (hdr >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error(path + ": bad header token " + tok);
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "n")
        n = std::stoi(val);
      else if (key == "delta")
        delta = parse_double(val);
      else if (key == "m")
        m = std::stoi(val);
      else if (key == "seed")
        seed = std::stoull(val);
      else
        throw std::runtime_error(path + ": unknown header key " + key);
    }
  }
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing column header");

  const int d = n - 1;
  std::vector<LineSegd> lines;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (static_cast<int>(fields.size()) != 2 * d)
      throw std::runtime_error(path + ": record with wrong field count");
    Vecd x(d), v(d);
    for (int i = 0; i < d; ++i) x(i) = parse_double(fields[static_cast<std::size_t>(i)]);
    for (int i = 0; i < d; ++i) v(i) = parse_double(fields[static_cast<std::size_t>(d + i)]);
    lines.emplace_back(std::move(x), std::move(v));
  }
  return TubeFamily(n, delta, m, std::move(lines), seed);
}

void write_field(const std::string& path, const ScalarField& field) {
  const GridSpec& spec = field.spec();
  std::string bytes;
  auto put = [&](const void* p, std::size_t len) {
    bytes.append(static_cast<const char*>(p), len);
  };
  put("TLFIELD1", 8);
  const std::int64_t n = spec.n;
  put(&n, 8);
  put(&spec.cell, 8);
  for (int a = 0; a < spec.n; ++a) put(&spec.lo(a), 8);
  for (int a = 0; a < spec.n; ++a) put(&spec.hi(a), 8);
  for (int a = 0; a < spec.n; ++a) {
    const std::int64_t dim = spec.dims()[a];
    put(&dim, 8);
  }
  put(field.values().data(), field.values().size() * 8);
  atomic_write_bytes(path, bytes);
}

ScalarField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open field file " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "TLFIELD1", 8) != 0)
    throw std::runtime_error(path + ": not a tubelab field snapshot");
  auto get64 = [&]() {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto getd = [&]() {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const auto n = static_cast<int>(get64());
  const double cell = getd();
  Vecd lo(n), hi(n);
  for (int a = 0; a < n; ++a) lo(a) = getd();
  for (int a = 0; a < n; ++a) hi(a) = getd();
  std::vector<std::int64_t> dims(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) dims[static_cast<std::size_t>(a)] = get64();
  if (!in) throw std::runtime_error(path + ": truncated header");
  GridSpec spec(n, cell, std::move(lo), std::move(hi));
  for (int a = 0; a < n; ++a)
    if (spec.dims()[a] != dims[static_cast<std::size_t>(a)])
      throw std::runtime_error(path + ": inconsistent grid dimensions");
  ScalarField field(spec, spec.total_cells());
  in.read(reinterpret_cast<char*>(field.values().data()),
          static_cast<std::streamsize>(field.values().size() * 8));
  if (!in) throw std::runtime_error(path + ": truncated value array");
  return field;
}

nlohmann::ordered_json profile_json(const ExponentProfile& p) {
  return {{"p", p.p.str()},
          {"q", p.q.str()},
          {"r", p.r.str()},
          {"alpha", p.alpha.str()},
          {"p_prime", p.pprime().str()},
          {"q_prime", p.qprime().str()}};
}

namespace {

nlohmann::ordered_json vec_json(const Vecd& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

nlohmann::ordered_json box_json(const OrientedBoxd& b) {
  nlohmann::ordered_json axes = nlohmann::ordered_json::array();
  for (int j = 0; j < b.axes.cols(); ++j) axes.push_back(vec_json(b.axes.col(j)));
  return {{"center", vec_json(b.center)}, {"axes", axes}, {"half_lengths", vec_json(b.half_lengths)}};
}

nlohmann::ordered_json slab_json(const Slabd& s) {
  nlohmann::ordered_json basis = nlohmann::ordered_json::array();
  for (int j = 0; j < s.normal_basis.cols(); ++j) basis.push_back(vec_json(s.normal_basis.col(j)));
  return {{"plane_point", vec_json(s.plane_point)}, {"normal_basis", basis}, {"theta", s.theta}};
}

nlohmann::ordered_json report_json(const EstimateReport& r) {
  nlohmann::ordered_json j;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["ratio"] = r.ratio;
  if (!std::isnan(r.slope)) j["slope"] = r.slope;
  j["partial"] = r.partial;
  if (r.partial) j["partial_reason"] = r.partial_reason;
  j["params"] = {{"n", r.n},
                 {"delta", r.delta},
                 {"cell", r.cell},
                 {"m_declared", r.m_declared},
                 {"m_realized", r.m_realized},
                 {"family_size", r.family_size},
                 {"epsilon", r.epsilon},
                 {"seed", r.seed},
                 {"spec", r.spec_text},
                 {"profile", profile_json(r.profile)}};
  if (!r.sweep.empty()) {
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const SweepPoint& sp : r.sweep)
      pts.push_back({{"delta", sp.delta}, {"lhs", sp.lhs}, {"rhs", sp.rhs}, {"ratio", sp.ratio}});
    j["sweep"] = pts;
  }
  return j;
}

std::string sweep_csv(const EstimateReport& r) {
  std::ostringstream oss;
  oss << "delta,lhs,rhs,ratio\n";
  if (r.sweep.empty()) {
    oss << format_double(r.delta) << "," << format_double(r.lhs) << "," << format_double(r.rhs)
        << "," << format_double(r.ratio) << "\n";
  } else {
    for (const SweepPoint& sp : r.sweep)
      oss << format_double(sp.delta) << "," << format_double(sp.lhs) << ","
          << format_double(sp.rhs) << "," << format_double(sp.ratio) << "\n";
  }
  return oss.str();
}

std::string sweep_dat(const EstimateReport& r) {
  std::ostringstream oss;
  oss << "# delta lhs rhs ratio\n";
  for (const SweepPoint& sp : r.sweep)
    oss << format_double(sp.delta) << " " << format_double(sp.lhs) << " " << format_double(sp.rhs)
        << " " << format_double(sp.ratio) << "\n";
  return oss.str();
}

}  // namespace tubelab

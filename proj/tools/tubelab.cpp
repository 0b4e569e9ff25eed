// tubelab: batch experiment runner for discretized x-ray transform estimates
// over delta-tube families. Subcommands: gen, eval, sweep, structure, dim.

#include "tubelab/estimate.hpp"
#include "tubelab/gen.hpp"
#include "tubelab/io.hpp"
#include "tubelab/structure.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tubelab;

namespace {

double parse_scale(const std::string& tok) {
  // Accepts "2^-6" or a plain decimal.
  const auto caret = tok.find("^");
  if (caret != std::string::npos) {
    const double base = std::stod(tok.substr(0, caret));
    const double expo = std::stod(tok.substr(caret + 1));
    return std::pow(base, expo);
  }
  return std::stod(tok);
}

std::vector<double> parse_scale_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_scale(tok));
  }
  return out;
}

Rat parse_rat(const std::string& tok) {
  if (tok == "inf" || tok == "infinity") return Rat::infinity();
  const auto slash = tok.find('/');
  if (slash != std::string::npos)
    return Rat(std::stoll(tok.substr(0, slash)), std::stoll(tok.substr(slash + 1)));
  const auto dot = tok.find('.');
  if (dot == std::string::npos) return Rat(std::stoll(tok));
  // Decimal: scale by a power of ten.
  const std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
  long long den = 1;
  for (std::size_t i = 0; i < tok.size() - dot - 1; ++i) den *= 10;
  return Rat(std::stoll(digits), den);
}

ExponentProfile parse_profile(const std::string& text, int n) {
  if (text == "squid") return squid_profile(n);
  std::vector<std::string> toks;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) toks.push_back(tok);
  if (toks.size() != 4)
    throw CLI::ValidationError("--profile", "expected 'squid' or 'p,q,r,alpha' rationals");
  ExponentProfile prof;
  prof.p = parse_rat(toks[0]);
  prof.q = parse_rat(toks[1]);
  prof.r = parse_rat(toks[2]);
  prof.alpha = parse_rat(toks[3]);
  return prof;
}

std::string sibling_path(const std::string& path, const std::string& newext) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + newext;
  return path.substr(0, dot) + newext;
}

struct CommonOpts {
  int n = 3;
  std::string delta_text = "2^-5";
  std::string cell_text;  // empty: delta/2
  std::string profile = "squid";
  double epsilon = 0;
  std::uint64_t seed = 0;
  std::int64_t budget = kDefaultCellBudget;
  std::string out;

  double delta() const { return parse_scale(delta_text); }
  double cell() const { return cell_text.empty() ? 0.0 : parse_scale(cell_text); }
};

void add_common(CLI::App* cmd, CommonOpts& o, const std::string& default_out) {
  o.out = default_out;
  cmd->add_option("--n", o.n, "ambient dimension (>= 3)");
  cmd->add_option("--delta", o.delta_text, "tube radius scale, e.g. 0.03125 or 2^-5");
  cmd->add_option("--cell", o.cell_text, "grid cell size (default delta/2)");
  cmd->add_option("--profile", o.profile, "exponent profile: squid | p,q,r,alpha");
  cmd->add_option("--epsilon", o.epsilon, "epsilon in the RHS exponent");
  cmd->add_option("--seed", o.seed, "generator seed");
  cmd->add_option("--budget-cells", o.budget, "maximum grid cell count");
  cmd->add_option("--out", o.out, "output path");
}

int run(int argc, char** argv) {
  CLI::App app{"tubelab: x-ray transform estimates over delta-tube families"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "",
                 "config file: key=value lines under a [subcommand] section; flags win");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "generate a family file from a spec");
  CommonOpts gen_opts;
  add_common(gen_cmd, gen_opts, "family.txt");
  std::string gen_spec;
  gen_cmd->add_option("spec", gen_spec, "generator spec, e.g. 'bush count=64'")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate the estimate on a family file");
  CommonOpts eval_opts;
  add_common(eval_cmd, eval_opts, "report.json");
  std::string eval_family;
  eval_cmd->add_option("family", eval_family, "family file")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "evaluate a generator spec over a delta list");
  CommonOpts sweep_opts;
  add_common(sweep_cmd, sweep_opts, "sweep.json");
  std::string sweep_spec, sweep_deltas = "2^-4,2^-5,2^-6";
  sweep_cmd->add_option("spec", sweep_spec, "generator spec")->required();
  sweep_cmd->add_option("--deltas", sweep_deltas, "descending dyadic deltas, e.g. 2^-4,2^-5");

  // structure
  auto* struct_cmd = app.add_subcommand("structure", "structural analyses of a family");
  CommonOpts struct_opts;
  add_common(struct_cmd, struct_opts, "structure.json");
  std::string struct_sub, struct_family, struct_out_family;
  double opt_sigma = 0.25, opt_c0 = 0.25, opt_lambda = 0, opt_kappa = 2.0, opt_nu = 0.0;
  double opt_box_constant = 4.0;
  int opt_slack = 1, opt_N = 10;
  std::int64_t opt_pairs = 2000;
  std::string opt_thetas, opt_stem_x, opt_stem_v;
  struct_cmd->add_option("analysis", struct_sub, "plate | brush | twoends | bilinear | cordoba | slab")
      ->required();
  struct_cmd->add_option("family", struct_family, "family file")->required();
  struct_cmd->add_option("--sigma", opt_sigma, "hairbrush angle level");
  struct_cmd->add_option("--slack", opt_slack, "dyadic slack for the hairbrush window");
  struct_cmd->add_option("--c0", opt_c0, "bilinear separation constant");
  struct_cmd->add_option("--lambda", opt_lambda, "two-ends density (default: measured)");
  struct_cmd->add_option("--N", opt_N, "two-ends ball-scale parameter");
  struct_cmd->add_option("--kappa", opt_kappa, "two-ends slack factor");
  struct_cmd->add_option("--nu", opt_nu, "two-ends polylog slack exponent");
  struct_cmd->add_option("--pairs", opt_pairs, "candidate pair budget for searches");
  struct_cmd->add_option("--box-constant", opt_box_constant, "plate shape constant C");
  struct_cmd->add_option("--thetas", opt_thetas, "slab thickness list (default dyadic)");
  struct_cmd->add_option("--stem-x", opt_stem_x, "brush stem base, comma-separated (default 0)");
  struct_cmd->add_option("--stem-v", opt_stem_v, "brush stem slope, comma-separated (default 0)");
  struct_cmd->add_option("--out-family", struct_out_family, "also write the selected subfamily");

  // dim
  auto* dim_cmd = app.add_subcommand("dim", "box-counting dimension of a family union or field");
  CommonOpts dim_opts;
  add_common(dim_cmd, dim_opts, "dim.csv");
  std::string dim_input, dim_scales;
  dim_cmd->add_option("input", dim_input, "family file or field snapshot")->required();
  dim_cmd->add_option("--scales", dim_scales, "comma-separated dyadic scales")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen_cmd) {
      const GenSpec spec = GenSpec::parse(gen_spec);
      TubeFamily fam = make_family(spec, gen_opts.n, gen_opts.delta(), gen_opts.seed);
      write_family(gen_opts.out, fam);
      std::cout << "wrote " << fam.size() << " lines to " << gen_opts.out << "\n";
      return 0;
    }

    if (*eval_cmd) {
      const TubeFamily fam = read_family(eval_family);
      if (fam.lines.empty()) {
        std::cerr << "eval: family file has no records\n";
        return 1;
      }
      const ExponentProfile prof = parse_profile(eval_opts.profile, fam.n);
      EvalOptions opts;
      opts.cell = eval_opts.cell();
      opts.budget = eval_opts.budget;
      EstimateReport rep = evaluate(fam, prof, eval_opts.epsilon, opts);
      rep.spec_text = eval_family;
      atomic_write_text(eval_opts.out, report_json(rep).dump(2) + "\n");
      atomic_write_text(sibling_path(eval_opts.out, ".csv"), sweep_csv(rep));
      std::cout << "lhs " << format_double(rep.lhs) << " rhs " << format_double(rep.rhs)
                << " ratio " << format_double(rep.ratio) << "\n";
      return std::isfinite(rep.ratio) ? 0 : 1;
    }

    if (*sweep_cmd) {
      const GenSpec spec = GenSpec::parse(sweep_spec);
      const std::vector<double> deltas = parse_scale_list(sweep_deltas);
      const ExponentProfile prof = parse_profile(sweep_opts.profile, sweep_opts.n);
      EvalOptions opts;
      opts.cell = sweep_opts.cell();
      opts.budget = sweep_opts.budget;
      EstimateReport rep =
          sweep(family_factory(spec, sweep_opts.n, sweep_opts.seed), deltas, prof,
                sweep_opts.epsilon, opts);
      rep.spec_text = spec.canonical();
      atomic_write_text(sweep_opts.out, report_json(rep).dump(2) + "\n");
      atomic_write_text(sibling_path(sweep_opts.out, ".csv"), sweep_csv(rep));
      atomic_write_text(sibling_path(sweep_opts.out, ".dat"), sweep_dat(rep));
      std::cout << "slope " << format_double(rep.slope) << (rep.partial ? " (partial)" : "")
                << "\n";
      if (rep.partial) return rep.budget_refused ? 2 : 1;
      return 0;
    }

    if (*struct_cmd) {
      const TubeFamily fam = read_family(struct_family);
      if (fam.lines.empty()) {
        std::cerr << "structure: family file has no records\n";
        return 1;
      }
      const ExponentProfile prof = parse_profile(struct_opts.profile, fam.n);
      const double cell = struct_opts.cell() > 0 ? struct_opts.cell() : fam.delta / 2;
      nlohmann::ordered_json j;
      j["analysis"] = struct_sub;
      j["family"] = struct_family;
      j["params"] = {{"n", fam.n}, {"delta", fam.delta}, {"cell", cell}, {"seed", struct_opts.seed}};

      if (struct_sub == "plate") {
        PlateSearchOptions popts;
        popts.max_pairs = opt_pairs;
        popts.seed = struct_opts.seed;
        popts.box_constant = opt_box_constant;
        const PlateResult res = plate_number(fam, popts);
        j["value"] = res.value;
        j["w"] = res.w;
        j["count"] = res.count;
        j["witness"] = box_json(res.witness);
      } else if (struct_sub == "brush") {
        Vecd stem_x = Vecd::Zero(fam.n - 1), stem_v = Vecd::Zero(fam.n - 1);
        auto fill = [&](const std::string& text, Vecd& out) {
          if (text.empty()) return;
          const std::vector<double> vals = parse_scale_list(text);
          if (static_cast<int>(vals.size()) != fam.n - 1)
            throw std::invalid_argument("structure brush: stem needs n-1 components");
          for (int a = 0; a < fam.n - 1; ++a) out(a) = vals[static_cast<std::size_t>(a)];
        };
        fill(opt_stem_x, stem_x);
        fill(opt_stem_v, stem_v);
        const LineSegd stem(stem_x, stem_v);
        const TubeFamily brush = hairbrush(fam, stem, opt_sigma, opt_slack);
        j["sigma"] = opt_sigma;
        j["slack"] = opt_slack;
        j["input_size"] = fam.size();
        j["brush_size"] = brush.size();
        if (!struct_out_family.empty()) write_family(struct_out_family, brush);
      } else if (struct_sub == "twoends") {
        const GridSpec spec = GridSpec::standard(fam.n, cell);
        const ScalarField E = indicator_field(fam, spec, struct_opts.budget);
        double lambda = opt_lambda;
        if (lambda <= 0) lambda = density_stats(fam, E).lambda;
        TwoEndsParams params;
        params.N = opt_N;
        params.epsilon = struct_opts.epsilon > 0 ? struct_opts.epsilon : 0.1;
        params.slack_kappa = opt_kappa;
        params.slack_nu = opt_nu;
        std::int64_t passed = 0;
        for (std::int64_t i = 0; i < fam.size(); ++i)
          if (two_ends_check(fam.tube(i), E, params, lambda)) ++passed;
        j["lambda"] = lambda;
        j["N"] = params.N;
        j["epsilon"] = params.epsilon;
        j["kappa"] = params.slack_kappa;
        j["nu"] = params.slack_nu;
        j["checked"] = fam.size();
        j["passed"] = passed;
        j["all_passed"] = passed == fam.size();
      } else if (struct_sub == "bilinear") {
        const GridSpec spec = GridSpec::standard(fam.n, cell);
        const BilinearSplit split = bilinear_split(fam, opt_c0, prof, spec, struct_opts.budget);
        j["c0"] = opt_c0;
        j["norm"] = split.norm;
        j["first_size"] = split.first.size();
        j["second_size"] = split.second.size();
        nlohmann::ordered_json c1 = nlohmann::ordered_json::array(), c2 = nlohmann::ordered_json::array();
        for (int a = 0; a < split.center_first.size(); ++a) {
          c1.push_back(split.center_first(a));
          c2.push_back(split.center_second(a));
        }
        j["first_center"] = c1;
        j["second_center"] = c2;
        if (!struct_out_family.empty()) {
          write_family(struct_out_family, split.first);
          write_family(sibling_path(struct_out_family, ".second.txt"), split.second);
        }
      } else if (struct_sub == "cordoba") {
        GridSpec spec = GridSpec::standard(fam.n, cell);
        const CordobaResult res = cordoba_l2(fam, {}, &spec, struct_opts.budget);
        j["measured_l2_sq"] = res.measured_l2_sq;
        j["incidence_bound"] = res.incidence_bound;
        j["ratio"] = res.measured_l2_sq / res.incidence_bound;
      } else if (struct_sub == "slab") {
        const GridSpec spec = GridSpec::standard(fam.n, cell);
        const ScalarField E = indicator_field(fam, spec, struct_opts.budget);
        std::vector<double> thetas;
        if (!opt_thetas.empty()) {
          thetas = parse_scale_list(opt_thetas);
        } else {
          for (double t = fam.delta; t <= 0.5; t *= 2) thetas.push_back(t);
        }
        SlabSearchOptions sopts;
        sopts.max_pairs = opt_pairs;
        sopts.seed = struct_opts.seed;
        const SlabSearchResult res = best_slab_search(E, thetas, fam, sopts);
        j["theta"] = res.theta;
        j["mass"] = res.mass;
        j["slab"] = slab_json(res.slab);
      } else {
        std::cerr << "structure: unknown analysis '" << struct_sub << "'\n";
        return 1;
      }
      atomic_write_text(struct_opts.out, j.dump(2) + "\n");
      std::cout << "wrote " << struct_opts.out << "\n";
      return 0;
    }

    if (*dim_cmd) {
      const std::vector<double> scales = parse_scale_list(dim_scales);
      if (scales.size() < 3) {
        std::cerr << "dim: need at least 3 scales\n";
        return 1;
      }
      ScalarField field = [&]() {
        // Family files are text with a magic line; field snapshots are binary.
        std::ifstream probe(dim_input);
        std::string first;
        std::getline(probe, first);
        if (first == "# tubelab family v1") {
          const TubeFamily fam = read_family(dim_input);
          const double cell = dim_opts.cell() > 0 ? dim_opts.cell() : fam.delta / 2;
          return indicator_field(fam, GridSpec::standard(fam.n, cell), dim_opts.budget);
        }
        return read_field(dim_input);
      }();
      const auto counts = box_count(field, scales);
      std::vector<std::pair<double, double>> pts;
      for (const auto& [s, c] : counts)
        if (c > 0) pts.emplace_back(1.0 / s, static_cast<double>(c));
      const double dimension = fit_loglog_slope(pts);
      std::ostringstream csv;
      csv << "scale,count\n";
      for (const auto& [s, c] : counts) csv << format_double(s) << "," << c << "\n";
      atomic_write_text(dim_opts.out, csv.str());
      std::cout << "dimension " << format_double(dimension) << "\n";
      return 0;
    }
  } catch (const BudgetError& e) {
    std::cerr << "resource refusal: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }

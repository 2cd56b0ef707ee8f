// Command-line front end for the hbnet library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbnet/constructions.hpp"
#include "hbnet/fem2d.hpp"
#include "hbnet/netcore.hpp"
#include "hbnet/verify.hpp"

namespace {

namespace cn = hbnet::constructions;

// Bad user input; reported on stderr with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<unsigned> parse_exponents(const std::string& text) {
  std::vector<unsigned> k;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    long v = -1;
    try {
      v = std::stol(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 0) throw UsageError("bad exponent '" + item + "'");
    k.push_back(static_cast<unsigned>(v));
  }
  if (k.empty()) throw UsageError("--exponents needs at least one entry");
  return k;
}

// Splits a line on commas and whitespace into numbers. Returns false on a
// token that is not a full number.
bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::string token;
  auto flush = [&]() {
    if (token.empty()) return true;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size()) return false;
    out.push_back(v);
    token.clear();
    return true;
  };
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!flush()) return false;
      if (c == ',' && out.empty()) return false;
    } else {
      token += c;
    }
  }
  return flush();
}

struct BuildParams {
  int levels = 4;
  double bound = 1.0;
  std::string exponents;
  std::string coeffs;
  int mesh_level = 2;
  std::string values;
  std::uint64_t seed = 1;
};

hbnet::Network build_target(const std::string& target, const BuildParams& p) {
  try {
    if (target == "g") return cn::build_g();
    if (target == "g-ell") return cn::build_g_ell(p.levels);
    if (target == "relu1") return cn::build_relu1();
    if (target == "x2") return cn::build_x2_hat(p.levels);
    if (target == "xy") return cn::build_xy_hat(p.levels, p.bound);
    if (target == "psi") return cn::build_psi_ell(p.levels);
    if (target == "hat2d") return cn::build_hat2d();
    if (target == "monomial") {
      if (p.exponents.empty()) throw UsageError("monomial needs --exponents");
      return cn::build_monomial(cn::Monomial(parse_exponents(p.exponents)), p.levels);
    }
    if (target == "polynomial") {
      if (p.coeffs.empty()) throw UsageError("polynomial needs --coeffs");
      return cn::build_polynomial(cn::polynomial_from_json(read_file(p.coeffs)), p.levels);
    }
    if (target == "fem") {
      const auto fem = p.values.empty()
                           ? hbnet::verify::random_fem_function(p.mesh_level, {0.0, 1.0, 0.0, 1.0}, p.seed)
                           : hbnet::fem2d::fem_from_json(read_file(p.values));
      const auto placements = cn::fem_to_placements(fem);
      if (placements.empty()) return hbnet::MlpNetwork{2, {}, hbnet::AffineMap::zeros(1, 2)};
      return cn::build_fem2d(placements);
    }
  } catch (const hbnet::ParseError& e) {
    throw UsageError(e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unknown build target '" + target + "'");
}

int cmd_eval(const std::string& net_path, const std::string& points_path) {
  hbnet::Network net;
  try {
    net = hbnet::deserialize(read_file(net_path));
  } catch (const hbnet::ParseError& e) {
    throw UsageError(net_path + ": " + e.what());
  } catch (const hbnet::StructuralError& e) {
    throw UsageError(net_path + ": " + e.what());
  }
  const std::size_t d = hbnet::input_dim(net);
  std::ifstream in(points_path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + points_path);
  std::string out;
  for (std::size_t k = 0; k < d; ++k) out += "x" + std::to_string(k) + ",";
  out += "value\n";
  std::string line;
  std::vector<double> x;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, x)) throw UsageError(points_path + ":" + std::to_string(lineno) + ": malformed row");
    if (x.size() != d) {
      throw UsageError(points_path + ":" + std::to_string(lineno) + ": expected " + std::to_string(d) +
                       " coordinates, got " + std::to_string(x.size()));
    }
    for (double v : x) out += hbnet::verify::format_real(v) + ",";
    out += hbnet::verify::format_real(hbnet::eval(net, x)) + "\n";
  }
  std::cout << out;
  return 0;
}

int cmd_convert(const std::string& net_path) {
  hbnet::Network net;
  try {
    net = hbnet::deserialize(read_file(net_path));
  } catch (const std::exception& e) {
    throw UsageError(net_path + ": " + e.what());
  }
  const auto* skip = std::get_if<hbnet::SkipNetwork>(&net);
  if (!skip) throw UsageError("input is already a plain network");
  std::cout << hbnet::serialize(cn::skip_to_mlp(*skip));
  std::cerr << "width delta " << 2 * (skip->input_dim + 1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, evaluate and verify ReLU network constructions"};
  app.require_subcommand(1);

  BuildParams bp;
  std::string target, out_path;
  auto* build = app.add_subcommand("build", "Write a network document");
  build->add_option("target", target, "g, g-ell, relu1, x2, xy, psi, hat2d, monomial, polynomial or fem")->required();
  build->add_option("--levels", bp.levels, "Number of levels L (ell for g-ell and psi)");
  build->add_option("--bound", bp.bound, "Input bound M for xy");
  build->add_option("--exponents", bp.exponents, "Comma-separated exponents for monomial");
  build->add_option("--coeffs", bp.coeffs, "Polynomial document for polynomial");
  build->add_option("--mesh-level", bp.mesh_level, "Mesh level of a generated FEM function");
  build->add_option("--values", bp.values, "FEM document for fem");
  build->add_option("--seed", bp.seed, "Seed of a generated FEM function");
  build->add_option("--out", out_path, "Output file (default: standard output)");

  std::string net_path, points_path;
  auto* evalc = app.add_subcommand("eval", "Evaluate a network at points, one per line");
  evalc->add_option("net", net_path)->required();
  evalc->add_option("points", points_path)->required();

  std::string suite;
  hbnet::verify::Options vo;
  int max_level = 0;
  bool no_timing = false;
  auto* verify = app.add_subcommand("verify", "Check claims and print a CSV report");
  verify->add_option("suite", suite, "Suite name or 'all'")->required();
  verify->add_option("--max-level", max_level, "Largest level for level sweeps");
  verify->add_option("--seed", vo.seed, "Seed for sampled points and random networks");
  verify->add_option("--trials", vo.trials, "Random networks in the convert suite");
  verify->add_flag("--no-timing", no_timing, "Write 0 in the runtime column");

  std::string convert_path;
  auto* convert = app.add_subcommand("convert", "Rewrite a skip network as a plain network");
  convert->add_option("net", convert_path)->required();

  std::string report_dir;
  std::uint64_t report_seed = 1;
  auto* report = app.add_subcommand("report", "Write error curves and function tables");
  report->add_option("--out", report_dir, "Output directory")->required();
  report->add_option("--seed", report_seed, "Seed for sampled points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*build) {
      const std::string doc = hbnet::serialize(build_target(target, bp));
      if (out_path.empty()) {
        std::cout << doc;
      } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw UsageError("cannot write " + out_path);
        out << doc;
      }
      return 0;
    }
    if (*evalc) return cmd_eval(net_path, points_path);
    if (*convert) return cmd_convert(convert_path);
    if (*report) {
      try {
        hbnet::verify::write_report(report_dir, report_seed);
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
      return 0;
    }
    if (*verify) {
      if (verify->count("--max-level")) vo.max_level = max_level;
      std::vector<hbnet::verify::ClaimRow> rows;
      try {
        rows = hbnet::verify::run_suite(suite, vo);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      std::cout << hbnet::verify::to_csv(rows, !no_timing);
      for (const auto& r : rows)
        if (!r.pass) return 1;
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

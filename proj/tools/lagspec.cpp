// lagspec: analytic spectra of large time-lagged correlation matrices and
// Monte-Carlo validation. Subcommands: analytic, mc, radius, compare.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "lagspec/ensemble.hpp"
#include "lagspec/errors.hpp"
#include "lagspec/io.hpp"
#include "lagspec/lagged_laws.hpp"
#include "lagspec/radial.hpp"
#include "lagspec/sandwich.hpp"
#include "lagspec/transforms.hpp"

namespace {

using lagspec::UsageError;

std::vector<double> parse_grid(const std::string& spec) {
  double a = 0.0, b = 0.0;
  long n = 0;
  char extra = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%ld%c", &a, &b, &n, &extra) != 3) {
    throw UsageError("bad grid '" + spec + "': expected start:stop:count");
  }
  if (!(a < b) || n < 2) {
    throw UsageError("bad grid '" + spec + "': need start < stop and count >= 2");
  }
  std::vector<double> grid(n);
  for (long i = 0; i < n; ++i) grid[i] = a + (b - a) * i / (n - 1);
  return grid;
}

void parse_fraction(const std::string& spec, int& p, int& q) {
  char extra = 0;
  if (std::sscanf(spec.c_str(), "%d/%d%c", &p, &q, &extra) != 2) {
    throw UsageError("bad beta '" + spec + "': expected a fraction p/q");
  }
}

std::string default_name(const std::string& stem, const std::string& format) {
  return stem + (format == "json" ? ".json" : ".csv");
}

lagspec::io::CurveData radial_to_curve(const lagspec::radial::RadialCurve& c,
                                       const std::string& method) {
  lagspec::io::CurveData out;
  out.columns = {"s", "F", "rho", "O"};
  out.params["kind"] = "analytic";
  out.params["method"] = method;
  out.params["r"] = lagspec::io::format_param(c.r);
  out.params["beta"] = lagspec::io::format_param(c.beta);
  out.params["convention"] =
      c.convention == lagspec::radial::RadialConvention::lagged ? "lagged" : "cyclic_product";
  out.params["zero_mode_weight"] = lagspec::io::format_param(c.zero_mode_weight);
  for (size_t i = 0; i < c.grid.size(); ++i) {
    out.rows.push_back({c.grid[i], c.F[i], c.rho[i], c.O[i]});
  }
  if (c.clamped_points > 0) {
    out.params["out_of_ring_points"] = std::to_string(c.clamped_points);
  }
  return out;
}

int cmd_analytic(const std::string& method, double r, const std::string& beta_spec,
                 const std::string& grid_spec, const std::string& matrix_path,
                 std::string out_path, const std::string& format) {
  using lagspec::io::CurveData;
  CurveData curve;

  if (method == "sym") {
    lagspec::radial::SymDensity rho(r);
    const double edge = rho.edge() * 1.05;
    const auto grid =
        grid_spec.empty() ? parse_grid("-" + std::to_string(edge) + ":" +
                                       std::to_string(edge) + ":401")
                          : parse_grid(grid_spec);
    curve.columns = {"lambda", "rho"};
    curve.params = {{"kind", "analytic"}, {"method", "sym"},
                    {"r", lagspec::io::format_param(r)},
                    {"edge", lagspec::io::format_param(rho.edge())}};
    for (double lam : grid) curve.rows.push_back({lam, rho(lam)});
  } else if (method == "whiten") {
    const auto measure = lagspec::frv::free_jacobi_measure(r);
    const double hi = std::max(measure.support_hi * 1.05, 1e-3);
    const auto grid = grid_spec.empty()
                          ? parse_grid("0:" + std::to_string(hi) + ":400")
                          : parse_grid(grid_spec);
    curve.columns = {"lambda", "rho"};
    curve.params = {{"kind", "analytic"}, {"method", "whiten"},
                    {"r", lagspec::io::format_param(r)},
                    {"support_hi", lagspec::io::format_param(measure.support_hi)},
                    {"atom_at_0", lagspec::io::format_param(measure.atoms[0].weight)},
                    {"atom_at_1", lagspec::io::format_param(measure.atoms[1].weight)}};
    for (double lam : grid) curve.rows.push_back({lam, measure.continuous(lam)});
  } else if (method == "hl" || method == "unit") {
    const auto ring = lagspec::radial::spectral_radii(r);
    const auto grid = grid_spec.empty()
                          ? parse_grid("0:" + std::to_string(ring.s_ext * 1.05) + ":400")
                          : parse_grid(grid_spec);
    curve = radial_to_curve(method == "hl" ? lagspec::radial::hl_curve(r, grid)
                                           : lagspec::lag::unit_lag_curve(r, grid),
                            method);
  } else if (method == "half") {
    const double s_ext = std::sqrt(2.0 * r);
    const auto grid = grid_spec.empty()
                          ? parse_grid("0:" + std::to_string(s_ext * 1.05) + ":400")
                          : parse_grid(grid_spec);
    curve.columns = {"s", "F", "rho", "O"};
    curve.params = {{"kind", "analytic"},
                    {"method", "half"},
                    {"r", lagspec::io::format_param(r)},
                    {"beta", "0.5"},
                    {"convention", "lagged"}};
    for (double s : grid) {
      const auto pt = lagspec::lag::half_lag_laws(s, r);
      curve.rows.push_back({s, pt.inside ? pt.f : 1.0, pt.rho, s > 0.0 ? pt.overlap : 0.0});
    }
  } else if (method == "deep") {
    if (beta_spec.empty()) throw UsageError("method deep requires --beta p/q");
    int p = 0, q = 1;
    parse_fraction(beta_spec, p, q);
    const lagspec::lag::LagLaw law(r, p, q);
    if (law.large_q()) {
      std::cerr << "warning: beta denominator q = " << law.q
                << " > 64; block-trace cost grows with q\n";
    }
    const double s_ext = lagspec::lag::deep_lag_radius(law);
    const auto grid = grid_spec.empty()
                          ? parse_grid("0:" + std::to_string(s_ext * 1.05) + ":400")
                          : parse_grid(grid_spec);
    curve = radial_to_curve(lagspec::lag::deep_lag_curve(law, grid), "deep");
    curve.params["beta_fraction"] = std::to_string(law.p) + "/" + std::to_string(law.q);
  } else if (method == "sandwich") {
    if (matrix_path.empty()) throw UsageError("method sandwich requires --matrix FILE");
    if (grid_spec.empty()) throw UsageError("method sandwich requires an explicit --grid");
    const Eigen::MatrixXcd A = lagspec::io::read_matrix(matrix_path);
    lagspec::qgf::SandwichProblem prob;
    prob.A = A;
    prob.r = r;
    const auto grid = parse_grid(grid_spec);
    const auto sc = lagspec::qgf::sandwich_radial_curve(prob, grid);
    curve.columns = {"s", "F", "rho", "O"};
    curve.params = {{"kind", "analytic"},
                    {"method", "sandwich"},
                    {"r", lagspec::io::format_param(r)},
                    {"t", std::to_string(A.rows())}};
    for (size_t i = 0; i < grid.size(); ++i) {
      curve.rows.push_back({grid[i], sc.f[i], sc.rho[i], sc.overlap[i]});
    }
  } else {
    throw UsageError("unknown method '" + method + "'");
  }

  if (out_path.empty()) out_path = default_name("lagspec_analytic_" + method, format);
  lagspec::io::write_curve(out_path, curve, format);
  std::cout << out_path << "\n";
  return 0;
}

int cmd_mc(const std::string& variant_name, int n, double r, int t_opt, int tau,
           int samples, std::uint64_t seed, const std::string& field_name, int bins,
           std::string out_prefix, const std::string& format) {
  using namespace lagspec::mc;
  EnsembleSpec spec;
  spec.N = n;
  spec.T = t_opt > 0 ? t_opt : static_cast<int>(std::llround(n / r));
  if (t_opt <= 0 && std::abs(spec.T * r - n) > 1e-6 * n) {
    throw UsageError("n/r is not an integer T; pass --t explicitly");
  }
  spec.tau = tau;
  spec.samples = samples;
  spec.seed = seed;
  if (field_name == "complex") {
    spec.field = Field::complex_field;
  } else if (field_name == "real") {
    spec.field = Field::real_field;
  } else {
    throw UsageError("unknown field '" + field_name + "'");
  }
  if (variant_name == "lagged_nilpotent") {
    spec.variant = Variant::lagged_nilpotent;
  } else if (variant_name == "lagged_cyclic") {
    spec.variant = Variant::lagged_cyclic;
  } else if (variant_name == "symmetrized") {
    spec.variant = Variant::symmetrized;
  } else if (variant_name == "whitened_square") {
    spec.variant = Variant::whitened_square;
  } else if (variant_name == "independent_product") {
    spec.variant = Variant::independent_product;
  } else {
    throw UsageError("unknown variant '" + variant_name + "'");
  }
  spec.validate();

  const auto samples_vec = run_ensemble(spec);

  BinningOptions opts;
  opts.bins = bins;
  opts.exclude_real_axis = spec.field == Field::real_field;
  const EmpiricalCurve curve = empirical_radial(samples_vec, opts);

  std::map<std::string, std::string> params = {
      {"kind", "mc"},
      {"variant", variant_name},
      {"n", std::to_string(spec.N)},
      {"t", std::to_string(spec.T)},
      {"tau", std::to_string(spec.tau)},
      {"r", lagspec::io::format_param(spec.r())},
      {"beta", lagspec::io::format_param(static_cast<double>(spec.tau) / spec.T)},
      {"samples", std::to_string(spec.samples)},
      {"seed", std::to_string(spec.seed)},
      {"bins", std::to_string(bins)},
      {"field", field_name},
      {"rejected", std::to_string(curve.rejected_samples)},
  };

  lagspec::io::RecordData records;
  records.params = params;
  for (const auto& s : samples_vec) {
    if (!s.accepted) continue;
    const bool has_o = s.overlaps.size() == s.eigenvalues.size();
    for (int i = 0; i < s.eigenvalues.size(); ++i) {
      records.rows.push_back({s.sample_index, s.eigenvalues[i].real(),
                              s.eigenvalues[i].imag(), has_o ? s.overlaps[i] : 1.0});
    }
  }

  lagspec::io::CurveData curve_data;
  curve_data.columns = {"s", "F", "rho", "O"};
  curve_data.params = params;
  for (size_t k = 0; k < curve.centers.size(); ++k) {
    curve_data.rows.push_back(
        {curve.centers[k], curve.cdf[k], curve.density[k], curve.overlap[k]});
  }

  if (out_prefix.empty()) out_prefix = "lagspec_mc";
  const std::string records_path = out_prefix + "_records.csv";
  lagspec::io::atomic_write(records_path, lagspec::io::records_to_csv(records));
  const std::string curve_path = default_name(out_prefix + "_curve", format);
  lagspec::io::write_curve(curve_path, curve_data, format);
  std::cout << records_path << "\n" << curve_path << "\n";
  return 0;
}

int cmd_radius(double r, const std::string& beta_grid_spec, std::string out_path,
               const std::string& format) {
  const auto grid = parse_grid(beta_grid_spec);
  for (double b : grid) {
    if (b <= 0.0 || b >= 1.0) {
      throw UsageError("beta grid must stay inside (0, 1)");
    }
  }
  lagspec::io::CurveData curve;
  curve.columns = {"beta", "s_ext"};
  curve.params = {{"kind", "radius"}, {"r", lagspec::io::format_param(r)}};
  for (double b : grid) {
    curve.rows.push_back({b, lagspec::lag::deep_lag_radius(r, b)});
  }
  if (out_path.empty()) out_path = default_name("lagspec_radius", format);
  lagspec::io::write_curve(out_path, curve, format);
  std::cout << out_path << "\n";
  return 0;
}

int cmd_compare(const std::string& analytic_path, const std::string& mc_path,
                std::string out_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto analytic = lagspec::io::read_curve(analytic_path);
  const auto mc = lagspec::io::read_curve(mc_path);
  auto report = lagspec::io::compare_curves(analytic, mc);
  report.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out_path.empty()) out_path = "lagspec_report.json";
  lagspec::io::atomic_write(out_path, lagspec::io::report_to_json(report));
  std::printf("sup_cdf_error            %.6g\n", report.sup_cdf_error);
  std::printf("l1_density_error         %.6g\n", report.l1_density_error);
  std::printf("overlap_rel_error_bulk   %.6g\n", report.overlap_rel_error_bulk);
  std::printf("rejected_samples         %ld\n", report.rejected_samples);
  std::cout << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analytic spectra and eigenvector overlaps of large time-lagged "
               "correlation matrices, with Monte-Carlo validation"};
  app.require_subcommand(1);

  // analytic
  std::string method, beta_spec, grid_spec, matrix_path, out_path, format = "csv";
  double r = 1.0;
  auto* analytic = app.add_subcommand("analytic", "evaluate an analytic law on a grid");
  analytic->add_option("--method", method,
                       "sym | whiten | hl | unit | half | deep | sandwich")->required();
  analytic->add_option("--r", r, "rectangularity N/T")->required();
  analytic->add_option("--beta", beta_spec, "lag depth tau/T as a fraction p/q (deep)");
  analytic->add_option("--grid", grid_spec, "start:stop:count");
  analytic->add_option("--matrix", matrix_path, "matrix file for method sandwich");
  analytic->add_option("--out", out_path, "output path");
  analytic->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  // mc
  std::string variant = "lagged_nilpotent", field_name = "complex", prefix;
  int n = 128, t_opt = 0, tau = 1, samples = 10, bins = 64;
  std::uint64_t seed = 1;
  double mc_r = 0.5;
  auto* mc = app.add_subcommand("mc", "Monte-Carlo ensemble runs");
  mc->add_option("--variant", variant,
                 "lagged_nilpotent | lagged_cyclic | symmetrized | whitened_square | "
                 "independent_product");
  mc->add_option("--n", n, "matrix size N")->required();
  mc->add_option("--r", mc_r, "rectangularity N/T")->required();
  mc->add_option("--t", t_opt, "series length T (overrides n/r)");
  mc->add_option("--tau", tau, "lag depth");
  mc->add_option("--samples", samples, "number of draws");
  mc->add_option("--seed", seed, "RNG seed (the only source of randomness)");
  mc->add_option("--field", field_name, "complex | real");
  mc->add_option("--bins", bins, "annular bins");
  mc->add_option("--out", prefix, "output path prefix");
  std::string mc_format = "csv";
  mc->add_option("--format", mc_format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

  // radius
  double radius_r = 0.5;
  std::string beta_grid;
  std::string radius_out, radius_format = "csv";
  auto* radius = app.add_subcommand("radius", "spectral radius as a function of lag depth");
  radius->add_option("--r", radius_r, "rectangularity N/T")->required();
  radius->add_option("--beta-grid", beta_grid, "start:stop:count inside (0,1)")->required();
  radius->add_option("--out", radius_out, "output path");
  radius->add_option("--format", radius_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  // compare
  std::string cmp_analytic, cmp_mc, cmp_out;
  auto* compare = app.add_subcommand("compare", "analytic vs Monte-Carlo discrepancy report");
  compare->add_option("--analytic", cmp_analytic, "analytic curve file")->required();
  compare->add_option("--mc", cmp_mc, "MC curve file")->required();
  compare->add_option("--out", cmp_out, "report path (JSON)");

  try {
    app.parse(argc, argv);
    if (*analytic) {
      return cmd_analytic(method, r, beta_spec, grid_spec, matrix_path, out_path, format);
    }
    if (*mc) {
      return cmd_mc(variant, n, mc_r, t_opt, tau, samples, seed, field_name, bins, prefix,
                    mc_format);
    }
    if (*radius) return cmd_radius(radius_r, beta_grid, radius_out, radius_format);
    if (*compare) return cmd_compare(cmp_analytic, cmp_mc, cmp_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const lagspec::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const lagspec::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

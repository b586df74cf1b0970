#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "lagspec/io.hpp"

// Exercises the installed command-line surface end to end. The binary path
// comes from the LAGSPEC_BIN environment variable set by CTest.

namespace {

namespace fs = std::filesystem;

std::string bin() {
  const char* env = std::getenv("LAGSPEC_BIN");
  REQUIRE_MESSAGE(env != nullptr, "LAGSPEC_BIN must point at the CLI binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "lagspec_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("analytic: unit lag curve holds the pinned f(1/sqrt 3) value") {
  TempDir tmp;
  const std::string out = tmp.file("unit.csv");
  REQUIRE(run("analytic --method unit --r 1 --grid 0:1.5:300 --out " + out) == 0);
  const auto curve = lagspec::io::read_curve(out);
  REQUIRE(curve.columns == std::vector<std::string>{"s", "F", "rho", "O"});
  const double target = 1.0 / std::sqrt(3.0);
  double best = 1e9, bestF = -1.0;
  for (const auto& row : curve.rows) {
    if (std::abs(row[0] - target) < best) {
      best = std::abs(row[0] - target);
      bestF = row[1];
    }
  }
  CHECK(bestF == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("analytic: hl at r=2 enters the support near 1/sqrt 2") {
  TempDir tmp;
  const std::string out = tmp.file("hl.csv");
  REQUIRE(run("analytic --method hl --r 2 --out " + out) == 0);
  const auto curve = lagspec::io::read_curve(out);
  double first_in_support = -1.0;
  for (const auto& row : curve.rows) {
    if (row[2] > 0.0) {
      first_in_support = row[0];
      break;
    }
  }
  CHECK(first_in_support == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("analytic --method unit --r 1 --grid 5:1:10") == 2);
  CHECK(run("analytic --method deep --r 0.5") == 2);       // missing beta
  CHECK(run("analytic --method nosuch --r 0.5") == 2);
  CHECK(run("mc --n 64 --r 0.5 --tau 128 --samples 1") == 2);  // tau >= T
  CHECK(run("mc --n 64 --r 2 --tau 1 --samples 1 --variant whitened_square") == 2);
  CHECK(run("radius --r 0.5 --beta-grid 0:0.9:5") == 2);   // beta = 0 in grid
  CHECK(run("nosuchcommand") == 2);
}

TEST_CASE("mc: fixed seed twice gives byte-identical outputs") {
  TempDir tmp;
  const std::string p1 = tmp.file("a"), p2 = tmp.file("b");
  const std::string args = "mc --variant lagged_nilpotent --n 24 --r 0.5 --tau 1 "
                           "--samples 3 --seed 7 --bins 16 --out ";
  REQUIRE(run(args + p1) == 0);
  REQUIRE(run(args + p2) == 0);
  CHECK(lagspec::io::read_file(p1 + "_curve.csv") ==
        lagspec::io::read_file(p2 + "_curve.csv"));
  CHECK(lagspec::io::read_file(p1 + "_records.csv") ==
        lagspec::io::read_file(p2 + "_records.csv"));
}

TEST_CASE("mc: spectrum stays inside 1.05 s_ext") {
  TempDir tmp;
  const std::string prefix = tmp.file("tail");
  REQUIRE(run("mc --variant lagged_nilpotent --n 256 --r 0.5 --tau 1 --samples 50 "
              "--seed 7 --out " + prefix) == 0);
  const auto records =
      lagspec::io::records_from_csv(lagspec::io::read_file(prefix + "_records.csv"));
  const double cutoff = 1.05 * std::sqrt(0.75);
  long inside = 0;
  for (const auto& row : records.rows) {
    if (std::hypot(row.re, row.im) <= cutoff) ++inside;
  }
  REQUIRE(!records.rows.empty());
  CHECK(static_cast<double>(inside) / records.rows.size() >= 0.99);
}

TEST_CASE("radius: flat sqrt(alpha r) segment and the unit-lag limit") {
  TempDir tmp;
  const std::string out = tmp.file("radius.csv");
  REQUIRE(run("radius --r 0.5 --beta-grid 0.001:0.9:200 --out " + out) == 0);
  const auto curve = lagspec::io::read_curve(out);
  REQUIRE(curve.columns == std::vector<std::string>{"beta", "s_ext"});
  CHECK(curve.rows.front()[1] == doctest::Approx(std::sqrt(0.75)).epsilon(1e-2));
  double prev = 0.0;
  for (const auto& row : curve.rows) {
    const double beta = row[0], s = row[1];
    if (beta >= 0.5) {
      CHECK(s == doctest::Approx(std::sqrt(0.5 / (1.0 - beta))).epsilon(1e-10));
      CHECK(s >= prev - 1e-12);  // increasing in beta on the flat-law segment
      prev = s;
    }
  }
}

TEST_CASE("compare: identical files give a zero report; mismatched r refuses") {
  TempDir tmp;
  const std::string curve = tmp.file("c.csv");
  REQUIRE(run("analytic --method unit --r 0.5 --grid 0.01:1:100 --out " + curve) == 0);
  const std::string report_path = tmp.file("rep.json");
  REQUIRE(run("compare --analytic " + curve + " --mc " + curve + " --out " + report_path) ==
          0);
  const auto report = lagspec::io::report_from_json(lagspec::io::read_file(report_path));
  CHECK(report.sup_cdf_error == 0.0);
  CHECK(report.l1_density_error == 0.0);

  const std::string other = tmp.file("c2.csv");
  REQUIRE(run("analytic --method unit --r 0.25 --grid 0.01:1:100 --out " + other) == 0);
  CHECK(run("compare --analytic " + curve + " --mc " + other) == 2);
}

TEST_CASE("sandwich method consumes the matrix file format") {
  TempDir tmp;
  // 8x8 identity: Wishart sandwich, rotationally trivial
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(8, 8);
  const std::string mpath = tmp.file("A.mat");
  lagspec::io::atomic_write(mpath, lagspec::io::matrix_to_string(A));
  const std::string out = tmp.file("sand.csv");
  REQUIRE(run("analytic --method sandwich --r 1 --matrix " + mpath +
              " --grid 4:6:5 --out " + out) == 0);
  const auto curve = lagspec::io::read_curve(out);
  REQUIRE(curve.rows.size() == 5);
  // z = 4 sits at the Marchenko-Pastur edge where G = 1/2, so f = g z = 2
  // (edge points converge in w only at a fractional rate)
  CHECK(curve.rows[0][1] == doctest::Approx(2.0).epsilon(1e-3));

  CHECK(run("analytic --method sandwich --r 1 --grid 4:6:5") == 2);  // no matrix
}

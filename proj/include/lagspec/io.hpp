#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace lagspec::io {

inline constexpr const char* kToolVersion = "0.1.0";

/// Column-oriented curve payload plus its parameter block. The same structure
/// round-trips through CSV (with `# key=value` comment headers) and JSON.
struct CurveData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // row-major, rows[i].size() == columns.size()
  std::map<std::string, std::string> params;
};

/// Raw per-eigenvalue records: sample,re,im,O_ii.
struct RecordData {
  struct Row {
    long sample;
    double re, im, o_ii;
  };
  std::vector<Row> rows;
  std::map<std::string, std::string> params;
};

struct ComparisonReport {
  double sup_cdf_error = 0.0;
  double l1_density_error = 0.0;
  double overlap_rel_error_bulk = 0.0;
  long rejected_samples = 0;
  std::map<std::string, std::string> params;
  std::string tool_version = kToolVersion;
  double wall_clock_s = 0.0;
};

// ---- formatting helpers ----
std::string format_double(double x);           // 17 significant digits
std::string format_param(double x);

// ---- atomic file primitives ----
/// Writes content to path via a temp file + rename; nothing partial survives
/// a failure. Throws IoError.
void atomic_write(const std::string& path, const std::string& content);

// ---- curve files ----
std::string curve_to_csv(const CurveData& curve);
std::string curve_to_json(const CurveData& curve);
CurveData curve_from_csv(const std::string& text);
CurveData curve_from_json(const std::string& text);
void write_curve(const std::string& path, const CurveData& curve, const std::string& format);
CurveData read_curve(const std::string& path);  // sniffs csv vs json

// ---- record files ----
std::string records_to_csv(const RecordData& records);
RecordData records_from_csv(const std::string& text);

// ---- report ----
std::string report_to_json(const ComparisonReport& report);
ComparisonReport report_from_json(const std::string& text);

// ---- matrix files: header "T=<n>", then T^2 complex re+imj entries ----
std::string matrix_to_string(const Eigen::MatrixXcd& A);
Eigen::MatrixXcd matrix_from_string(const std::string& text);
Eigen::MatrixXcd read_matrix(const std::string& path);

std::complex<double> parse_complex(const std::string& token);
std::string format_complex(std::complex<double> z);

std::string read_file(const std::string& path);

/// Sup CDF / L1 density / bulk overlap comparison of an analytic curve
/// (columns s,F,rho,O) against an MC curve on the MC bin centers; the
/// analytic curve is linearly interpolated. Param blocks must agree on the
/// shared numeric keys (r, beta, tau-derived quantities) or this refuses with
/// a diff. The outermost `edge_fraction` of in-support bins on each side is
/// excluded from the overlap error.
ComparisonReport compare_curves(const CurveData& analytic, const CurveData& mc,
                                double edge_fraction = 0.1);

}  // namespace lagspec::io

#include "lagspec/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lagspec/errors.hpp"

namespace lagspec::io {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
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

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

bool numeric_match(const std::string& a, const std::string& b, double tol = 1e-9) {
  try {
    const double xa = std::stod(a);
    const double xb = std::stod(b);
    return std::abs(xa - xb) <= tol * (1.0 + std::max(std::abs(xa), std::abs(xb)));
  } catch (...) {
    return a == b;
  }
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_param(double x) { return format_double(x); }

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("atomic_write: cannot open " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("atomic_write: write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("atomic_write: rename to " + path + " failed");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string curve_to_csv(const CurveData& curve) {
  std::ostringstream out;
  out << "# lagspec curve\n# schema=1\n";
  for (const auto& [k, v] : curve.params) out << "# " << k << "=" << v << "\n";
  for (size_t c = 0; c < curve.columns.size(); ++c) {
    out << curve.columns[c] << (c + 1 < curve.columns.size() ? "," : "\n");
  }
  for (const auto& row : curve.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << format_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
    }
  }
  return out.str();
}

CurveData curve_from_csv(const std::string& text) {
  CurveData curve;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const size_t eq = body.find('=');
      if (eq != std::string::npos) {
        curve.params[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      for (auto& c : split(line, ',')) curve.columns.push_back(trim(c));
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != curve.columns.size()) {
      throw IoError("curve_from_csv: row has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(curve.columns.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) {
      try {
        row.push_back(std::stod(cell));
      } catch (...) {
        throw IoError("curve_from_csv: bad number '" + cell + "'");
      }
    }
    curve.rows.push_back(std::move(row));
  }
  if (!header_seen) throw IoError("curve_from_csv: no header row");
  curve.params.erase("schema");
  return curve;
}

std::string curve_to_json(const CurveData& curve) {
  json j;
  j["schema"] = 1;
  j["kind"] = "curve";
  j["params"] = curve.params;
  j["columns"] = curve.columns;
  j["rows"] = curve.rows;
  return j.dump(2) + "\n";
}

CurveData curve_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("curve_from_json: ") + e.what());
  }
  CurveData curve;
  if (j.contains("params")) {
    for (auto& [k, v] : j["params"].items()) curve.params[k] = v.get<std::string>();
  }
  curve.columns = j.at("columns").get<std::vector<std::string>>();
  curve.rows = j.at("rows").get<std::vector<std::vector<double>>>();
  return curve;
}

void write_curve(const std::string& path, const CurveData& curve, const std::string& format) {
  if (format == "csv") {
    atomic_write(path, curve_to_csv(curve));
  } else if (format == "json") {
    atomic_write(path, curve_to_json(curve));
  } else {
    throw UsageError("write_curve: unknown format '" + format + "'");
  }
}

CurveData read_curve(const std::string& path) {
  const std::string text = read_file(path);
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    return c == '{' ? curve_from_json(text) : curve_from_csv(text);
  }
  throw IoError("read_curve: empty file " + path);
}

std::string records_to_csv(const RecordData& records) {
  std::ostringstream out;
  out << "# lagspec records\n# schema=1\n";
  for (const auto& [k, v] : records.params) out << "# " << k << "=" << v << "\n";
  out << "sample,re,im,O_ii\n";
  for (const auto& row : records.rows) {
    out << row.sample << ',' << format_double(row.re) << ',' << format_double(row.im)
        << ',' << format_double(row.o_ii) << "\n";
  }
  return out.str();
}

RecordData records_from_csv(const std::string& text) {
  RecordData records;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      const size_t eq = body.find('=');
      if (eq != std::string::npos) {
        records.params[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
      }
      continue;
    }
    if (!header_seen) {
      if (trim(line) != "sample,re,im,O_ii") {
        throw IoError("records_from_csv: unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 4) throw IoError("records_from_csv: bad row '" + line + "'");
    RecordData::Row row;
    try {
      row.sample = std::stol(cells[0]);
      row.re = std::stod(cells[1]);
      row.im = std::stod(cells[2]);
      row.o_ii = std::stod(cells[3]);
    } catch (...) {
      throw IoError("records_from_csv: bad row '" + line + "'");
    }
    records.rows.push_back(row);
  }
  records.params.erase("schema");
  return records;
}

std::string report_to_json(const ComparisonReport& report) {
  json j;
  j["schema"] = 1;
  j["kind"] = "comparison_report";
  j["sup_cdf_error"] = report.sup_cdf_error;
  j["l1_density_error"] = report.l1_density_error;
  j["overlap_rel_error_bulk"] = report.overlap_rel_error_bulk;
  j["rejected_samples"] = report.rejected_samples;
  j["params"] = report.params;
  j["tool_version"] = report.tool_version;
  j["wall_clock_s"] = report.wall_clock_s;
  return j.dump(2) + "\n";
}

ComparisonReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("report_from_json: ") + e.what());
  }
  ComparisonReport report;
  report.sup_cdf_error = j.at("sup_cdf_error").get<double>();
  report.l1_density_error = j.at("l1_density_error").get<double>();
  report.overlap_rel_error_bulk = j.at("overlap_rel_error_bulk").get<double>();
  report.rejected_samples = j.at("rejected_samples").get<long>();
  if (j.contains("params")) {
    for (auto& [k, v] : j["params"].items()) report.params[k] = v.get<std::string>();
  }
  report.tool_version = j.value("tool_version", std::string());
  report.wall_clock_s = j.value("wall_clock_s", 0.0);
  return report;
}

std::string format_complex(std::complex<double> z) {
  std::string out = format_double(z.real());
  if (z.imag() >= 0.0 || std::isnan(z.imag())) out += "+";
  out += format_double(z.imag()) + "j";
  return out;
}

std::complex<double> parse_complex(const std::string& token) {
  const std::string s = trim(token);
  if (s.empty()) throw IoError("parse_complex: empty token");
  if (s.back() == 'j' || s.back() == 'J') {
    const std::string body = s.substr(0, s.size() - 1);
    // split at the last +/- that is not a leading sign or an exponent sign
    size_t cut = std::string::npos;
    for (size_t i = body.size(); i-- > 1;) {
      if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
        cut = i;
        break;
      }
    }
    try {
      if (cut == std::string::npos) {
        // pure imaginary: "bj", "+j", "-j"
        if (body.empty() || body == "+" ) return {0.0, 1.0};
        if (body == "-") return {0.0, -1.0};
        return {0.0, std::stod(body)};
      }
      const std::string re = body.substr(0, cut);
      std::string im = body.substr(cut);
      if (im == "+") im = "1";
      if (im == "-") im = "-1";
      return {std::stod(re), std::stod(im)};
    } catch (const IoError&) {
      throw;
    } catch (...) {
      throw IoError("parse_complex: bad token '" + token + "'");
    }
  }
  try {
    return {std::stod(s), 0.0};
  } catch (...) {
    throw IoError("parse_complex: bad token '" + token + "'");
  }
}

std::string matrix_to_string(const Eigen::MatrixXcd& A) {
  const int T = static_cast<int>(A.rows());
  std::ostringstream out;
  out << "T=" << T << "\n";
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      out << format_complex(A(i, j)) << (j + 1 < T ? "," : "\n");
    }
  }
  return out.str();
}

Eigen::MatrixXcd matrix_from_string(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("matrix: empty input");
  line = trim(line);
  if (line.rfind("T=", 0) != 0) throw IoError("matrix: first line must be T=<n>");
  int T = 0;
  try {
    T = std::stoi(line.substr(2));
  } catch (...) {
    throw IoError("matrix: bad size in '" + line + "'");
  }
  if (T < 1) throw IoError("matrix: size must be >= 1");

  std::vector<std::complex<double>> entries;
  entries.reserve(static_cast<size_t>(T) * T);
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    for (const auto& tok : split(line, ',')) {
      const std::string t = trim(tok);
      if (!t.empty()) entries.push_back(parse_complex(t));
    }
  }
  if (entries.size() != static_cast<size_t>(T) * T) {
    throw IoError("matrix: expected " + std::to_string(T * T) + " entries, found " +
                  std::to_string(entries.size()));
  }
  Eigen::MatrixXcd A(T, T);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) A(i, j) = entries[static_cast<size_t>(i) * T + j];
  }
  return A;
}

Eigen::MatrixXcd read_matrix(const std::string& path) {
  return matrix_from_string(read_file(path));
}

ComparisonReport compare_curves(const CurveData& analytic, const CurveData& mc,
                                double edge_fraction) {
  // header compatibility on shared numeric keys; beta carries a finite-T
  // allowance because an MC run can only realize tau/T on the grid 1/T
  double beta_tol = 1e-9;
  if (const auto it = mc.params.find("t"); it != mc.params.end()) {
    try {
      beta_tol = std::max(beta_tol, 1.5 / std::stod(it->second));
    } catch (...) {
    }
  }
  std::string diff;
  for (const char* key : {"r", "beta"}) {
    const auto ita = analytic.params.find(key);
    const auto itm = mc.params.find(key);
    if (ita != analytic.params.end() && itm != mc.params.end() &&
        !numeric_match(ita->second, itm->second,
                       std::string(key) == "beta" ? beta_tol : 1e-9)) {
      diff += std::string(key) + ": analytic=" + ita->second + " mc=" + itm->second + "; ";
    }
  }
  if (!diff.empty()) {
    throw UsageError("compare_curves: incompatible params - " + diff);
  }

  auto col_index = [](const CurveData& c, const std::string& name) {
    for (size_t i = 0; i < c.columns.size(); ++i) {
      if (c.columns[i] == name) return static_cast<long>(i);
    }
    return -1L;
  };
  const long as = col_index(analytic, "s"), aF = col_index(analytic, "F"),
             ar = col_index(analytic, "rho"), aO = col_index(analytic, "O");
  const long ms = col_index(mc, "s"), mF = col_index(mc, "F"), mr = col_index(mc, "rho"),
             mO = col_index(mc, "O");
  if (as < 0 || aF < 0 || ar < 0 || ms < 0 || mF < 0 || mr < 0) {
    throw UsageError("compare_curves: need s,F,rho columns in both curves");
  }

  // linear interpolation of the analytic columns onto MC bin centers
  auto interp = [&](long col, double s) {
    const auto& rows = analytic.rows;
    if (rows.empty()) throw UsageError("compare_curves: empty analytic curve");
    if (s <= rows.front()[as]) return rows.front()[col];
    if (s >= rows.back()[as]) return rows.back()[col];
    size_t lo = 0, hi = rows.size() - 1;
    while (hi - lo > 1) {
      const size_t mid = (lo + hi) / 2;
      (rows[mid][as] <= s ? lo : hi) = mid;
    }
    const double s0 = rows[lo][as], s1 = rows[hi][as];
    const double t = s1 > s0 ? (s - s0) / (s1 - s0) : 0.0;
    return rows[lo][col] * (1.0 - t) + rows[hi][col] * t;
  };

  // support window from the analytic density
  double s_lo = 0.0, s_hi = 0.0;
  bool found = false;
  for (const auto& row : analytic.rows) {
    if (row[ar] > 0.0) {
      if (!found) s_lo = row[as];
      s_hi = row[as];
      found = true;
    }
  }
  if (!found) throw UsageError("compare_curves: analytic density vanishes everywhere");
  const double width = s_hi - s_lo;

  ComparisonReport report;
  report.params = mc.params;
  for (const auto& [k, v] : analytic.params) report.params["analytic_" + k] = v;
  const auto rej = mc.params.find("rejected");
  if (rej != mc.params.end()) report.rejected_samples = std::stol(rej->second);

  double overlap_num = 0.0, overlap_den = 0.0;
  for (size_t i = 0; i < mc.rows.size(); ++i) {
    const double s = mc.rows[i][ms];
    report.sup_cdf_error =
        std::max(report.sup_cdf_error, std::abs(interp(aF, s) - mc.rows[i][mF]));
    // annular weight of this bin
    const double half = i + 1 < mc.rows.size()
                            ? 0.5 * (mc.rows[i + 1][ms] - s)
                            : (i > 0 ? 0.5 * (s - mc.rows[i - 1][ms]) : 0.5 * s);
    const double area = 2.0 * 3.141592653589793 * s * 2.0 * half;
    report.l1_density_error += std::abs(interp(ar, s) - mc.rows[i][mr]) * area;
    if (aO >= 0 && mO >= 0 && s >= s_lo + edge_fraction * width &&
        s <= s_hi - edge_fraction * width) {
      const double oa = interp(aO, s);
      overlap_num += std::abs(oa - mc.rows[i][mO]) * area;
      overlap_den += std::abs(oa) * area;
    }
  }
  report.overlap_rel_error_bulk = overlap_den > 0.0 ? overlap_num / overlap_den : 0.0;
  return report;
}

}  // namespace lagspec::io

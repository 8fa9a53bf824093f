#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bohm/arrival.hpp"
#include "bohm/errors.hpp"
#include "bohm/observables.hpp"
#include "bohm/trajectory.hpp"
#include "bohm/app/format.hpp"

namespace bohm::app {

// CSV files carry `# key = value` comment lines, then a header row, then
// numeric rows. Column order is fixed per file kind.
struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::vector<double> column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (columns[c] != name) continue;
      std::vector<double> out;
      out.reserve(rows.size());
      for (const auto& r : rows) out.push_back(r[c]);
      return out;
    }
    throw config_error("CSV has no column '" + name + "'");
  }

  std::string meta_value(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw config_error("CSV header lacks '" + key + "'");
    return it->second;
  }
};

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) t.meta[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw config_error(path + ":" + std::to_string(line_no) + ": wrong number of fields");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        throw config_error(path + ":" + std::to_string(line_no) + ": not a number: '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw config_error("'" + path + "' has no header row");
  return t;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& kind,
            const std::vector<std::pair<std::string, std::string>>& meta,
            const std::vector<std::string>& columns)
      : out_(path), width_(columns.size()) {
    if (!out_) throw config_error("cannot write '" + path + "'");
    out_ << "# bohm-arrival " << kind << "\n";
    for (const auto& [k, v] : meta) out_ << "# " << k << " = " << v << "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) out_ << (c ? "," : "") << columns[c];
    out_ << "\n";
  }

  void row(std::initializer_list<double> values) {
    std::size_t c = 0;
    for (double v : values) out_ << (c++ ? "," : "") << fmt_num(v);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

inline void write_boundary_csv(const std::string& path, const BoundaryRecord& rec, double p0,
                               const std::string& hash) {
  CsvWriter w(path, "boundary",
              {{"config_hash", hash}, {"detector_a", fmt_num(rec.detector.a)},
               {"detector_b", fmt_num(rec.detector.b)}, {"P0", fmt_num(p0)}},
              {"t", "j_a", "j_b"});
  for (std::size_t k = 0; k < rec.times.size(); ++k) w.row({rec.times[k], rec.j_a[k], rec.j_b[k]});
}

struct BoundaryFile {
  BoundaryRecord record;
  double p0 = 0.0;
  std::string config_hash;
};

inline BoundaryFile read_boundary_csv(const std::string& path) {
  const auto t = read_csv(path);
  BoundaryFile f;
  f.record.detector = DetectorRegion(std::stod(t.meta_value("detector_a")),
                                     std::stod(t.meta_value("detector_b")));
  f.p0 = t.meta.count("P0") ? std::stod(t.meta.at("P0")) : 0.0;
  f.config_hash = t.meta.count("config_hash") ? t.meta.at("config_hash") : "";
  f.record.times = t.column("t");
  f.record.j_a = t.column("j_a");
  f.record.j_b = t.column("j_b");
  f.record.validate();
  return f;
}

inline void write_arrival_csv(const std::string& path, const ArrivalResult& r,
                              const std::string& hash) {
  CsvWriter w(path, "arrival",
              {{"config_hash", hash}, {"detector_a", fmt_num(r.detector.a)},
               {"detector_b", fmt_num(r.detector.b)}, {"P0", fmt_num(r.P0)}, {"N", fmt_num(r.N)}},
              {"t", "f_a", "f_b", "runmax_fa", "runmax_negfb", "P", "Pc", "delta"});
  for (std::size_t k = 0; k < r.times.size(); ++k)
    w.row({r.times[k], r.f_a[k], r.f_b[k], r.runmax_fa[k], r.runmax_negfb[k], r.P[k], r.Pc[k],
           r.delta[k]});
}

inline void write_empirical_csv(const std::string& path, const EmpiricalCdf& cdf,
                                std::uint64_t seed, const std::string& hash) {
  CsvWriter w(path, "empirical",
              {{"config_hash", hash}, {"samples", std::to_string(cdf.count)},
               {"seed", std::to_string(seed)}},
              {"t", "P_hat", "std_error"});
  for (std::size_t k = 0; k < cdf.times.size(); ++k)
    w.row({cdf.times[k], cdf.p_hat[k], cdf.std_error[k]});
}

inline EmpiricalCdf read_empirical_csv(const std::string& path) {
  const auto t = read_csv(path);
  EmpiricalCdf cdf;
  cdf.count = std::stoul(t.meta_value("samples"));
  cdf.times = t.column("t");
  cdf.p_hat = t.column("P_hat");
  cdf.std_error = t.column("std_error");
  return cdf;
}

// Every `sample_stride`-th sample of each path, plus its last sample.
inline void write_trajectories_csv(const std::string& path, const EnsembleResult& ens,
                                   std::size_t sample_stride, const std::string& hash) {
  CsvWriter w(path, "trajectories",
              {{"config_hash", hash}, {"seed", std::to_string(ens.seed)},
               {"aborted", std::to_string(ens.aborted)}},
              {"id", "t", "x"});
  sample_stride = std::max<std::size_t>(1, sample_stride);
  for (std::size_t i = 0; i < ens.trajectories.size(); ++i) {
    const auto& tr = ens.trajectories[i];
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      if (k % sample_stride == 0 || k + 1 == tr.times.size())
        w.row({static_cast<double>(i), tr.times[k], tr.positions[k]});
  }
}

inline void write_comparison_csv(const std::string& path, const OracleComparison& c) {
  CsvWriter w(path, "comparison", {{"samples", std::to_string(c.samples)}},
              {"t", "P", "P_hat", "bound", "pass"});
  for (std::size_t k = 0; k < c.times.size(); ++k)
    w.row({c.times[k], c.P[k], c.P_hat[k], c.bound[k],
           std::abs(c.P[k] - c.P_hat[k]) <= c.bound[k] ? 1.0 : 0.0});
}

}  // namespace bohm::app

#include "pgu/observations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "pgu/error.hpp"

namespace pgu {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(cell);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_double(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ": cannot parse " + column + " value '" +
                    cell + "'");
  }
  return v;
}

}  // namespace

int ObservationSet::n_periods() const {
  int m = -1;
  for (const auto& r : records) m = std::max(m, r.period);
  return m + 1;
}

ObservationSet ObservationSet::period(int t) const {
  ObservationSet out{domains, variables, {}, bound};
  for (const auto& r : records)
    if (r.period == t) out.records.push_back(r);
  return out;
}

ObservationSet ObservationSet::up_to(int t) const {
  ObservationSet out{domains, variables, {}, bound};
  for (const auto& r : records)
    if (r.period <= t) out.records.push_back(r);
  return out;
}

std::vector<std::size_t> ObservationSet::blocks() const {
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.block);
  return out;
}

std::vector<Vec3> ObservationSet::locations() const {
  std::vector<Vec3> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.location);
  return out;
}

ObservationSet load_observations(const std::filesystem::path& path,
                                 const ObservationLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open observations file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = split_csv(line);
  const std::vector<std::string> fixed{"x", "y", "z", "period", "domain"};
  if (header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw DataError(path.string() + ": header must start with x,y,z,period,domain");
  }

  ObservationSet obs;
  obs.domains = options.domains;
  std::size_t col = fixed.size();
  for (; col < header.size() && header[col].rfind("err_", 0) != 0; ++col) {
    obs.variables.push_back(header[col]);
  }
  std::vector<std::size_t> err_var;  // err column -> variable index
  for (; col < header.size(); ++col) {
    if (header[col].rfind("err_", 0) != 0) {
      throw DataError(path.string() + ": grade column '" + header[col] + "' after error columns");
    }
    const std::string var = header[col].substr(4);
    const auto it = std::find(obs.variables.begin(), obs.variables.end(), var);
    if (it == obs.variables.end()) {
      throw DataError(path.string() + ": error column '" + header[col] + "' has no grade column");
    }
    err_var.push_back(static_cast<std::size_t>(it - obs.variables.begin()));
  }
  if (!options.variables.empty() && options.variables != obs.variables) {
    throw DataError(path.string() + ": grade columns do not match the configured variables");
  }
  const std::size_t m = obs.variables.size();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    ObservationRecord rec;
    for (int a = 0; a < 3; ++a) rec.location[a] = parse_double(cells[a], line_no, header[a]);
    const double period = parse_double(cells[3], line_no, "period");
    if (period < 0 || period != std::floor(period)) {
      throw DataError("line " + std::to_string(line_no) + ": period must be an integer >= 0");
    }
    rec.period = static_cast<int>(period);
    if (!cells[4].empty()) {
      auto it = std::find(obs.domains.begin(), obs.domains.end(), cells[4]);
      if (it == obs.domains.end()) {
        if (!options.domains.empty()) {
          throw DataError("line " + std::to_string(line_no) + ": unknown domain label '" +
                          cells[4] + "'");
        }
        obs.domains.push_back(cells[4]);
        it = obs.domains.end() - 1;
      }
      rec.domain = static_cast<int>(it - obs.domains.begin());
    }
    std::size_t present = 0;
    std::vector<double> grades(m, 0.0);
    for (std::size_t v = 0; v < m; ++v) {
      const auto& cell = cells[fixed.size() + v];
      if (cell.empty()) continue;
      grades[v] = parse_double(cell, line_no, obs.variables[v]);
      ++present;
    }
    if (present != 0 && present != m) {
      throw DataError("line " + std::to_string(line_no) + ": partial grade vector");
    }
    if (present == m && m > 0) rec.grades = std::move(grades);
    if (!err_var.empty()) {
      rec.error_sd.assign(m, 0.0);
      for (std::size_t e = 0; e < err_var.size(); ++e) {
        const auto& cell = cells[fixed.size() + m + e];
        if (cell.empty()) continue;
        const double sd = parse_double(cell, line_no, header[fixed.size() + m + e]);
        if (sd < 0) throw DataError("line " + std::to_string(line_no) + ": negative error sd");
        rec.error_sd[err_var[e]] = sd;
      }
    }
    if (options.grid) {
      const auto block = options.grid->locate(rec.location);
      if (!block) {
        throw DataError("line " + std::to_string(line_no) + ": coordinate outside grid");
      }
      rec.block = *block;
    }
    obs.records.push_back(std::move(rec));
  }
  if (options.grid) {
    obs.bound = true;
    obs = upscale_to_blocks(std::move(obs), *options.grid);
  }
  return obs;
}

ObservationSet upscale_to_blocks(ObservationSet obs, const GridSpec& grid) {
  std::vector<std::size_t> abundance(obs.domains.size(), 0);
  for (auto& r : obs.records) {
    const auto block = grid.locate(r.location);
    if (!block) throw DataError("observation outside grid");
    r.block = *block;
    if (r.domain) ++abundance[static_cast<std::size_t>(*r.domain)];
  }
  std::map<std::pair<int, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < obs.records.size(); ++i) {
    groups[{obs.records[i].period, obs.records[i].block}].push_back(i);
  }
  const std::size_t m = obs.variables.size();
  std::vector<ObservationRecord> merged;
  merged.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    if (members.size() == 1) {
      merged.push_back(obs.records[members.front()]);
      continue;
    }
    ObservationRecord out;
    out.period = key.first;
    out.block = key.second;
    std::vector<std::size_t> votes(obs.domains.size(), 0);
    std::vector<double> grade_sum(m, 0.0), err_sum(m, 0.0);
    std::size_t n_grades = 0, n_err = 0;
    for (const std::size_t i : members) {
      const auto& r = obs.records[i];
      for (int a = 0; a < 3; ++a) out.location[a] += r.location[a] / static_cast<double>(members.size());
      if (r.domain) ++votes[static_cast<std::size_t>(*r.domain)];
      if (r.grades) {
        for (std::size_t v = 0; v < m; ++v) grade_sum[v] += (*r.grades)[v];
        ++n_grades;
      }
      if (!r.error_sd.empty()) {
        for (std::size_t v = 0; v < m; ++v) err_sum[v] += r.error_sd[v];
        ++n_err;
      }
    }
    int best = -1;
    for (std::size_t d = 0; d < votes.size(); ++d) {
      if (votes[d] == 0) continue;
      if (best < 0 || votes[d] > votes[best] ||
          (votes[d] == votes[best] && abundance[d] > abundance[best])) {
        best = static_cast<int>(d);
      }
    }
    if (best >= 0) out.domain = best;
    if (n_grades > 0) {
      out.grades = std::vector<double>(m);
      for (std::size_t v = 0; v < m; ++v) (*out.grades)[v] = grade_sum[v] / static_cast<double>(n_grades);
    }
    if (n_err > 0) {
      out.error_sd.resize(m);
      for (std::size_t v = 0; v < m; ++v) out.error_sd[v] = err_sum[v] / static_cast<double>(n_err);
    }
    merged.push_back(std::move(out));
  }
  // Keep period-major, then block order: deterministic and independent of file order.
  obs.records = std::move(merged);
  obs.bound = true;
  return obs;
}

void write_observations(const std::filesystem::path& path, const ObservationSet& obs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "x,y,z,period,domain";
  for (const auto& v : obs.variables) out << ',' << v;
  bool has_err = std::any_of(obs.records.begin(), obs.records.end(),
                             [](const auto& r) { return !r.error_sd.empty(); });
  if (has_err)
    for (const auto& v : obs.variables) out << ",err_" << v;
  out << '\n' << std::setprecision(17);
  for (const auto& r : obs.records) {
    out << r.location[0] << ',' << r.location[1] << ',' << r.location[2] << ',' << r.period << ',';
    if (r.domain) out << obs.domains[static_cast<std::size_t>(*r.domain)];
    for (std::size_t v = 0; v < obs.variables.size(); ++v) {
      out << ',';
      if (r.grades) out << (*r.grades)[v];
    }
    if (has_err) {
      for (std::size_t v = 0; v < obs.variables.size(); ++v) {
        out << ',';
        if (!r.error_sd.empty()) out << r.error_sd[v];
      }
    }
    out << '\n';
  }
}

}  // namespace pgu

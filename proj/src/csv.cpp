#include "catoni/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace catoni {

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary => LF stays LF
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  return out;
}

void write_metadata(std::ofstream& out,
                    const std::map<std::string, std::string>& metadata) {
  for (const auto& [key, value] : metadata) {
    out << '#' << key << '=' << value << '\n';
  }
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

bool parse_cell(const std::string& cell, double& value) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  value = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string cell = line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    // trim surrounding blanks and a trailing CR from Windows-origin files
    while (!cell.empty() &&
           (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.pop_back();
    }
    std::string::size_type lead = 0;
    while (lead < cell.size() && (cell[lead] == ' ' || cell[lead] == '\t')) {
      ++lead;
    }
    fields.push_back(cell.substr(lead));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

CsvReadResult read_csv(const std::string& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");

  CsvReadResult result;
  std::vector<std::vector<double>> rows;
  std::size_t n_fields = 0;
  bool header_pending = has_header;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (header_pending) {
      result.header = std::move(fields);
      n_fields = result.header.size();
      header_pending = false;
      continue;
    }
    if (n_fields == 0) {
      n_fields = fields.size();
    } else if (fields.size() != n_fields) {
      std::ostringstream msg;
      msg << path << ":" << line_number << ": expected " << n_fields
          << " fields, found " << fields.size();
      throw std::runtime_error(msg.str());
    }
    std::vector<double> row(fields.size());
    bool ok = true;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_cell(fields[j], row[j])) {
        ok = false;
        break;
      }
    }
    if (ok) {
      rows.push_back(std::move(row));
    } else {
      ++result.dropped_rows;
    }
  }
  if (n_fields == 0) {
    throw std::runtime_error(path + ": empty file");
  }
  result.values.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(n_fields));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < n_fields; ++j) {
      result.values(static_cast<Eigen::Index>(i),
                    static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return result;
}

void write_report(const QuantileReport& report, const std::string& path) {
  auto out = open_for_write(path);
  write_metadata(out, report.metadata);
  out << "method,level,error\n";
  for (const auto& row : report.rows) {
    out << row.method << ',' << format_double(row.level) << ','
        << format_double(row.error) << '\n';
  }
  finish(out, path);
}

void write_report(const SweepReport& report, const std::string& path) {
  auto out = open_for_write(path);
  write_metadata(out, report.metadata);
  out << "method,param,q99\n";
  for (const auto& row : report.rows) {
    out << row.method << ',' << format_double(row.parameter_value) << ','
        << format_double(row.q99) << '\n';
  }
  finish(out, path);
}

void write_metrics(
    const std::vector<std::pair<std::string, MetricsBundle>>& rows,
    const std::map<std::string, std::string>& metadata,
    const std::string& path) {
  auto out = open_for_write(path);
  write_metadata(out, metadata);
  out << "method,mae,medae,trimmed_mae\n";
  for (const auto& [name, metrics] : rows) {
    out << name << ',' << format_double(metrics.mae) << ','
        << format_double(metrics.medae) << ','
        << format_double(metrics.trimmed_mae) << '\n';
  }
  finish(out, path);
}

void write_named_values(
    const std::vector<std::pair<std::string, double>>& rows,
    const std::map<std::string, std::string>& metadata,
    const std::string& path) {
  auto out = open_for_write(path);
  write_metadata(out, metadata);
  out << "name,value\n";
  for (const auto& [name, value] : rows) {
    out << name << ',' << format_double(value) << '\n';
  }
  finish(out, path);
}

}  // namespace catoni

#include "lnpr/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lnpr/error.hpp"

namespace lnpr {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& field, std::size_t row) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("csv row " + std::to_string(row) + ": cannot parse number '" + field +
                          "'");
  }
  if (!std::isfinite(value)) {
    throw ValidationError("csv row " + std::to_string(row) + ": non-finite value");
  }
  return value;
}

struct Parsed {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::vector<std::size_t> rows;  // source line of each record
};

Parsed parse(const std::string& text) {
  Parsed out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    auto fields = split(content);
    if (out.header.empty()) {
      out.header = fields;
      out.columns.resize(fields.size());
      continue;
    }
    if (fields.size() != out.header.size()) {
      throw ValidationError("csv row " + std::to_string(number) + ": expected " +
                            std::to_string(out.header.size()) + " columns, found " +
                            std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      out.columns[c].push_back(parse_double(fields[c], number));
    }
    out.rows.push_back(number);
  }
  if (out.header.empty()) throw ValidationError("csv: missing header row");
  if (out.rows.empty()) throw ValidationError("csv: no data rows");
  return out;
}

Trace to_trace(const Parsed& p) {
  if (p.header.size() < 2 || p.header.size() > 3) {
    throw ValidationError("csv trace: expected columns time_s, value[, masked]");
  }
  if (p.header[0] != "time_s") {
    throw ValidationError("csv trace: first column must be time_s, found '" + p.header[0] + "'");
  }
  Trace trace;
  trace.value_name = p.header[1];
  trace.time_s = p.columns[0];
  trace.value = p.columns[1];
  if (p.header.size() == 3) {
    if (p.header[2] != "masked") {
      throw ValidationError("csv trace: third column must be 'masked'");
    }
    trace.masked.reserve(p.rows.size());
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      const double m = p.columns[2][i];
      if (m != 0.0 && m != 1.0) {
        throw ValidationError("csv row " + std::to_string(p.rows[i]) + ": masked must be 0 or 1");
      }
      trace.masked.push_back(m == 1.0);
    }
  }
  for (std::size_t i = 1; i < trace.time_s.size(); ++i) {
    if (!(trace.time_s[i] > trace.time_s[i - 1])) {
      throw ValidationError("csv row " + std::to_string(p.rows[i]) +
                            ": time must be strictly increasing");
    }
  }
  trace.validate();
  return trace;
}

SweepData to_sweep(const Parsed& p, std::vector<std::string>& warnings) {
  if (p.header.size() < 2 || p.header.size() > 3) {
    throw ValidationError("csv sweep: expected columns abscissa, value[, sigma]");
  }
  SweepData sweep;
  sweep.abscissa_name = p.header[0];
  sweep.value_name = p.header[1];
  sweep.abscissa = p.columns[0];
  sweep.value = p.columns[1];
  if (p.header.size() == 3) {
    if (p.header[2] != "sigma") throw ValidationError("csv sweep: third column must be 'sigma'");
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      if (!(p.columns[2][i] > 0.0)) {
        throw ValidationError("csv row " + std::to_string(p.rows[i]) + ": sigma must be > 0");
      }
    }
    sweep.sigma = p.columns[2];
  }
  if (sweep.sort_by_abscissa()) warnings.push_back("sweep rows were not sorted; sorted by " +
                                                   sweep.abscissa_name);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep.abscissa[i] == sweep.abscissa[i - 1]) {
      throw ValidationError("csv sweep: duplicate abscissa value " +
                            format_number(sweep.abscissa[i]));
    }
  }
  sweep.validate();
  return sweep;
}

void write_comments(std::ostringstream& out, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << "\n";
}

}  // namespace

IngestResult ingest_csv_string(const std::string& text, CsvKind kind) {
  const Parsed parsed = parse(text);
  IngestResult result;
  if (kind == CsvKind::trace) {
    result.data = to_trace(parsed);
  } else {
    result.data = to_sweep(parsed, result.warnings);
  }
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, CsvKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ingest_csv_string(buffer.str(), kind);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Trace ingest_trace(const std::filesystem::path& path) {
  return std::get<Trace>(ingest_csv(path, CsvKind::trace).data);
}

SweepData ingest_sweep(const std::filesystem::path& path) {
  return std::get<SweepData>(ingest_csv(path, CsvKind::sweep).data);
}

std::string format_number(double value) {
  char buffer[64];
  const auto [ptr, ec] =
      std::to_chars(buffer, buffer + sizeof buffer, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericalError("format_number failed");
  return std::string(buffer, ptr);
}

std::string to_csv(const Trace& trace, const std::vector<std::string>& comments) {
  std::ostringstream out;
  write_comments(out, comments);
  const bool masked = !trace.masked.empty();
  out << "time_s," << trace.value_name << (masked ? ",masked" : "") << "\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << format_number(trace.time_s[i]) << "," << format_number(trace.value[i]);
    if (masked) out << "," << (trace.masked[i] ? 1 : 0);
    out << "\n";
  }
  return out.str();
}

std::string to_csv(const SweepData& sweep, const std::vector<std::string>& comments) {
  std::ostringstream out;
  write_comments(out, comments);
  out << sweep.abscissa_name << "," << sweep.value_name << (sweep.sigma ? ",sigma" : "") << "\n";
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    out << format_number(sweep.abscissa[i]) << "," << format_number(sweep.value[i]);
    if (sweep.sigma) out << "," << format_number((*sweep.sigma)[i]);
    out << "\n";
  }
  return out.str();
}

std::string to_csv(const Table& table, const std::vector<std::string>& comments) {
  std::ostringstream out;
  write_comments(out, comments);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << table.columns[c];
  }
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw ValidationError("table row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_number(row[c]);
    out << "\n";
  }
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed for " + path.string());
}

}  // namespace lnpr

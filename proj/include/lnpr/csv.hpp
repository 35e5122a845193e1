#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "lnpr/data.hpp"

namespace lnpr {

enum class CsvKind { trace, sweep };

struct IngestResult {
  std::variant<Trace, SweepData> data;
  std::vector<std::string> warnings;
};

/// Header row required; '#' lines are comments. Traces: time_s, value and an
/// optional 0/1 "masked" column. Sweeps: abscissa, value and an optional
/// "sigma" column; unsorted rows are sorted with a warning.
IngestResult ingest_csv(const std::filesystem::path& path, CsvKind kind);
IngestResult ingest_csv_string(const std::string& text, CsvKind kind);

Trace ingest_trace(const std::filesystem::path& path);
SweepData ingest_sweep(const std::filesystem::path& path);

/// Shortest-exact decimal rendering is not used; every number is printed
/// with 17 significant digits so that re-ingestion is bit exact.
std::string format_number(double value);

std::string to_csv(const Trace& trace, const std::vector<std::string>& comments = {});
std::string to_csv(const SweepData& sweep, const std::vector<std::string>& comments = {});

/// Several value columns sharing one abscissa.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
std::string to_csv(const Table& table, const std::vector<std::string>& comments = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lnpr

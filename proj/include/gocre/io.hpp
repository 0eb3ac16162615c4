#pragma once

#include "gocre/engine.hpp"
#include "gocre/simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gocre {

inline constexpr int kModelFormatVersion = 1;

/// Numeric CSV with a header row.
struct Table {
    std::vector<std::string> header;
    Matrix values;
};

/// Non-numeric cells raise ParseError with their 1-based (row, column);
/// ragged rows raise FormatError.
Table read_table(std::istream& in);

/// Reads a comma-separated file with a header row. `response` names a
/// column, or gives its 0-based index when no header matches it. All other
/// columns become predictors, in file order.
Dataset load_csv(const std::filesystem::path& path, const std::string& response);
Dataset read_csv(std::istream& in, const std::string& response);

/// Header "<response>,<predictors...>", numbers at full round-trip precision.
void write_csv(std::ostream& out, const Dataset& data);

/// Formats with 10 significant digits, the precision of all CLI tables.
std::string format_number(double value);

/// Models are JSON documents. Numbers are written as shortest round-trip
/// decimals (at most 17 significant digits), so load(save(m)) is bit-exact.
void save_model(const std::filesystem::path& path, const GocreModel& model);
GocreModel load_model(const std::filesystem::path& path);
std::string model_to_json(const GocreModel& model);
GocreModel model_from_json(const std::string& text);

void write_report_csv(std::ostream& out, const BenchmarkReport& report, bool with_timings);
void write_replicates_csv(std::ostream& out, const BenchmarkReport& report, bool with_timings);

}  // namespace gocre

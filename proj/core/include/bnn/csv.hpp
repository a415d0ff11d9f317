#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bnn::csv {

/// Splits one CSV record on commas; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line);

/// "%.17g" formatting; every double round-trips exactly.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

/// True for an empty field or the literal NA (surrounding blanks ignored).
bool is_missing(std::string_view field);

std::string_view trim(std::string_view text);

/// Reads the next line, dropping a trailing '\r'. Returns false at end of input.
bool read_line(std::istream& in, std::string& line);

}  // namespace bnn::csv

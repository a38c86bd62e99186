#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace favar {

// Minimal RFC-4180-style CSV: quoted fields, "" escapes, no multiline
// fields. Leading/trailing whitespace of unquoted fields is trimmed.
std::vector<std::string> split_csv_line(const std::string& line);

// All non-empty lines of a CSV stream, split into fields.
std::vector<std::vector<std::string>> read_csv_rows(std::istream& in);
std::vector<std::vector<std::string>> read_csv_file(const std::string& path);

// Fixed-format numeric printer used by every CSV/JSON writer so repeated
// runs are byte-identical ("%.12g"; NaN prints as empty string).
std::string fmt_num(double x);

// Quotes a field if it contains a comma, quote, or newline.
std::string csv_quote(const std::string& field);

void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace favar

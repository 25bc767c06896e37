#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coupled_labels/datamodel.hpp"

namespace coupled_labels::csv {

/// Shortest representation that parses back to the identical double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

std::vector<std::string> split_line(std::string_view line);
std::vector<std::string> split_lines(const std::string& text);

/// Square or rectangular matrix with a header row; when row_names is
/// non-empty the first column holds them under `corner`.
std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& column_names,
                          const std::vector<std::string>& row_names = {},
                          const std::string& corner = "");

/// Inverse of matrix_to_csv with row names; returns the numeric block and
/// the column names (row names are discarded after a consistency check).
Matrix matrix_from_csv(const std::string& text, std::vector<std::string>* column_names = nullptr,
                       bool has_row_names = true);

}  // namespace coupled_labels::csv

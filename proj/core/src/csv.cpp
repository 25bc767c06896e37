#include "coupled_labels/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace coupled_labels::csv {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
    return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::vector<std::string> split_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& column_names,
                          const std::vector<std::string>& row_names, const std::string& corner) {
    if (static_cast<Eigen::Index>(column_names.size()) != m.cols())
        throw ValidationError("matrix_to_csv: column name count does not match matrix");
    const bool with_rows = !row_names.empty();
    if (with_rows && static_cast<Eigen::Index>(row_names.size()) != m.rows())
        throw ValidationError("matrix_to_csv: row name count does not match matrix");
    std::string out;
    if (with_rows) out += corner + ",";
    for (std::size_t j = 0; j < column_names.size(); ++j) {
        if (j) out += ',';
        out += column_names[j];
    }
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (with_rows) out += row_names[static_cast<std::size_t>(i)] + ",";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix matrix_from_csv(const std::string& text, std::vector<std::string>* column_names,
                       bool has_row_names) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ValidationError("matrix csv: empty input");
    auto header = split_line(lines.front());
    if (has_row_names) header.erase(header.begin());
    const auto cols = header.size();
    Matrix m(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 1; r < lines.size(); ++r) {
        auto fields = split_line(lines[r]);
        if (has_row_names && !fields.empty()) fields.erase(fields.begin());
        if (fields.size() != cols)
            throw ValidationError("matrix csv: row " + std::to_string(r) + " has " +
                                  std::to_string(fields.size()) + " values, expected " +
                                  std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c) {
            std::optional<double> v;
            if (fields[c] == "nan") v = std::nan("");
            else v = parse_double(fields[c]);
            if (!v) throw ValidationError("matrix csv: row " + std::to_string(r) + " column " +
                                          std::to_string(c) + ": not a number");
            m(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = *v;
        }
    }
    if (column_names) *column_names = std::move(header);
    return m;
}

}  // namespace coupled_labels::csv

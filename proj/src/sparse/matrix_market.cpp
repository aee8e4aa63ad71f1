#include "hybridcg/sparse/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hybridcg/errors.hpp"

namespace hybridcg {
namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        auto start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) {
            ++pos;
        }
        if (pos > start) {
            fields.push_back(line.substr(start, pos - start));
        }
    }
    return fields;
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
    T value{};
    // from_chars rejects a leading '+', which some writers emit
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(line, std::string("cannot read ") + what + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

CsrMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw ParseError(0, "empty input");
    }
    ++line_no;
    {
        auto fields = split_fields(line);
        if (fields.size() != 5 || lowercase(std::string(fields[0])) != "%%matrixmarket") {
            throw ParseError(line_no, "missing %%MatrixMarket banner");
        }
        if (lowercase(std::string(fields[1])) != "matrix") {
            throw ParseError(line_no, "object must be 'matrix'");
        }
        if (lowercase(std::string(fields[2])) != "coordinate") {
            throw ParseError(line_no, "only coordinate format is supported");
        }
        if (lowercase(std::string(fields[3])) != "real") {
            throw ParseError(line_no, "field must be 'real', got '" + std::string(fields[3]) + "'");
        }
        const auto symmetry = lowercase(std::string(fields[4]));
        if (symmetry != "general" && symmetry != "symmetric") {
            throw ParseError(line_no, "unsupported symmetry '" + std::string(fields[4]) + "'");
        }
        line = symmetry;
    }
    const bool symmetric = line == "symmetric";

    // size line: first non-comment, non-blank line
    std::size_t n_rows = 0, n_cols = 0, declared = 0;
    bool have_size = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.starts_with('%') || is_blank(line)) {
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ParseError(line_no, "size line must hold rows, columns and entry count");
        }
        n_rows = parse_number<std::size_t>(fields[0], line_no, "row count");
        n_cols = parse_number<std::size_t>(fields[1], line_no, "column count");
        declared = parse_number<std::size_t>(fields[2], line_no, "entry count");
        have_size = true;
        break;
    }
    if (!have_size) {
        throw ParseError(line_no, "missing size line");
    }
    if (n_rows == 0 || n_cols == 0 || declared == 0) {
        throw ParseError(line_no, "empty matrix");
    }
    if (symmetric && n_rows != n_cols) {
        throw ParseError(line_no, "symmetric matrix must be square");
    }

    std::vector<std::size_t> rows, cols;
    std::vector<double> vals;
    const auto reserve = symmetric ? 2 * declared : declared;
    rows.reserve(reserve);
    cols.reserve(reserve);
    vals.reserve(reserve);

    std::size_t seen = 0;
    while (seen < declared && std::getline(in, line)) {
        ++line_no;
        if (line.starts_with('%') || is_blank(line)) {
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != 3) {
            throw ParseError(line_no, "entry must hold row, column and value");
        }
        const auto i = parse_number<std::size_t>(fields[0], line_no, "row index");
        const auto j = parse_number<std::size_t>(fields[1], line_no, "column index");
        const auto v = parse_number<double>(fields[2], line_no, "value");
        if (i < 1 || i > n_rows || j < 1 || j > n_cols) {
            throw ParseError(line_no, "index (" + std::to_string(i) + "," + std::to_string(j) +
                                          ") outside declared bounds");
        }
        rows.push_back(i - 1);
        cols.push_back(j - 1);
        vals.push_back(v);
        if (symmetric && i != j) {
            rows.push_back(j - 1);
            cols.push_back(i - 1);
            vals.push_back(v);
        }
        ++seen;
    }
    if (seen < declared) {
        throw ParseError(line_no, "expected " + std::to_string(declared) + " entries, found " +
                                      std::to_string(seen));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.starts_with('%') && !is_blank(line)) {
            throw ParseError(line_no, "more entries than declared");
        }
    }
    return CsrMatrix::from_triplets(n_rows, n_cols, rows, cols, vals);
}

CsrMatrix parse_matrix_market(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_matrix_market(in);
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_matrix_market(in);
}

}  // namespace hybridcg

#include "tvarch/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tvarch/errors.hpp"

namespace tvarch {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

SeriesSample ingest_csv(const std::filesystem::path& path, const std::optional<ColumnSelector>& column,
                        std::size_t difference, std::size_t min_length) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input file '" + path.string() + "'");

    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> col_index;
    if (column && std::holds_alternative<std::size_t>(*column)) col_index = std::get<std::size_t>(*column);
    bool first_row = true;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (first_row) {
            first_row = false;
            if (column && std::holds_alternative<std::string>(*column)) {
                const auto& name = std::get<std::string>(*column);
                for (std::size_t i = 0; i < fields.size(); ++i)
                    if (fields[i] == name) col_index = i;
                if (!col_index) throw DataError("column '" + name + "' not found in header of '" + path.string() + "'");
                continue;
            }
            const std::size_t idx = col_index.value_or(0);
            if (idx < fields.size() && !parse_number(fields[idx])) continue;  // header row
        }
        const std::size_t idx = col_index.value_or(0);
        if (idx >= fields.size()) {
            std::ostringstream os;
            os << "line " << line_no << " has no column " << idx;
            throw DataError(os.str());
        }
        const auto v = parse_number(fields[idx]);
        if (!v || !std::isfinite(*v)) {
            std::ostringstream os;
            os << "non-numeric value '" << fields[idx] << "' at line " << line_no;
            throw DataError(os.str());
        }
        values.push_back(*v);
    }

    for (std::size_t d = 0; d < difference; ++d) {
        if (values.size() < 2) {
            values.clear();
            break;
        }
        for (std::size_t i = 0; i + 1 < values.size(); ++i) values[i] = values[i + 1] - values[i];
        values.pop_back();
    }
    if (values.size() < min_length) {
        std::ostringstream os;
        os << "only " << values.size() << " usable observations in '" << path.string() << "' (need at least "
           << min_length << ")";
        throw DataError(os.str());
    }
    return SeriesSample(std::move(values), 0);
}

void write_column_csv(const std::filesystem::path& path, const std::string& header,
                      std::span<const double> values) {
    std::string out = header + "\n";
    for (double v : values) {
        out += format_number(v);
        out += '\n';
    }
    write_text(path, out);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace tvarch

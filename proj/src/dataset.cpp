#include "nonsimplify/dataset.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nonsimplify/errors.hpp"

namespace nonsimplify {

std::vector<double> Dataset::x_column(std::size_t col) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xv(i, col);
    return out;
}

std::vector<double> Dataset::z_column(std::size_t col) const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = zv(i, col);
    return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_field(const std::string& s, std::size_t row, const std::string& col) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw CsvError("csv: row " + std::to_string(row) + ", column " + col +
                       ": cannot parse value '" + s + "'");
    if (std::isnan(v))
        throw CsvError("csv: row " + std::to_string(row) + ", column " + col +
                       ": missing values are not allowed");
    return v;
}

} // namespace

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw CsvError("csv: '" + path + "' is empty");
    const auto header = split_line(line);

    std::size_t d = 0, p = 0;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string expect_x = "x" + std::to_string(i + 1);
        const std::string expect_z = "z" + std::to_string(i - d + 1);
        if (p == 0 && header[i] == expect_x) {
            ++d;
        } else if (i >= d && header[i] == expect_z) {
            ++p;
        } else {
            throw CsvError("csv: unexpected header column '" + header[i] +
                           "' at position " + std::to_string(i + 1) +
                           " (expected x1..xd then z1..zp)");
        }
    }
    if (d == 0) throw CsvError("csv: header must contain at least column x1");

    Dataset data;
    data.d = d;
    data.p = p;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != header.size())
            throw CsvError("csv: row " + std::to_string(row) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(header.size()));
        for (std::size_t j = 0; j < d; ++j)
            data.x.push_back(parse_field(fields[j], row, header[j]));
        for (std::size_t j = 0; j < p; ++j)
            data.z.push_back(parse_field(fields[d + j], row, header[d + j]));
        ++data.n;
    }
    if (data.n == 0) throw CsvError("csv: '" + path + "' contains no data rows");
    return data;
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("csv: cannot write '" + path + "'");
    for (std::size_t j = 0; j < data.d; ++j) out << (j ? ",x" : "x") << (j + 1);
    for (std::size_t j = 0; j < data.p; ++j) out << ",z" << (j + 1);
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t j = 0; j < data.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.xv(i, j));
            out << (j ? "," : "") << buf;
        }
        for (std::size_t j = 0; j < data.p; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.zv(i, j));
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw CsvError("csv: write failed for '" + path + "'");
}

} // namespace nonsimplify

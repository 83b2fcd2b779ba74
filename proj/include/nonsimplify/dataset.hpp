#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nonsimplify {

/// n i.i.d. rows of (X in R^d, Z in R^p), row-major storage.
/// p may be zero (pure X data, e.g. input to the vine scores).
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t p = 0;
    std::vector<double> x;  // n * d
    std::vector<double> z;  // n * p
    std::uint64_t seed = 0; // provenance; 0 for ingested data

    double xv(std::size_t row, std::size_t col) const { return x[row * d + col]; }
    double zv(std::size_t row, std::size_t col) const { return z[row * p + col]; }

    std::vector<double> x_column(std::size_t col) const;
    std::vector<double> z_column(std::size_t col) const;
};

/// Reads a dataset from CSV with header `x1,...,xd[,z1,...,zp]`.
/// Throws CsvError with row/column diagnostics on malformed input.
Dataset read_csv(const std::string& path);

/// Writes the CSV form (LF line endings, full double precision).
void write_csv(const Dataset& data, const std::string& path);

} // namespace nonsimplify

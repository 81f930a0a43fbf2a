#ifndef HTICA_IO_HPP_
#define HTICA_IO_HPP_

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "htica/errors.hpp"
#include "htica/types.hpp"

namespace htica {

// Format a double with enough digits to round-trip (>= 15 significant digits).
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct SampleFileHeader {
    Eigen::Index n = 0;
    Eigen::Index count = 0;
    std::uint64_t seed = 0;
};

/**
 * Sample file format: one sample per line, n whitespace-separated decimals.
 * First line may carry the optional header `# n=<dim> N=<count> seed=<seed>`.
 */
inline void write_samples(const std::string& path, const SampleMatrix& samples,
                          std::optional<SampleFileHeader> header = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
    if (header) {
        out << "# n=" << header->n << " N=" << header->count << " seed=" << header->seed << "\n";
    }
    for (Eigen::Index i = 0; i < samples.count(); ++i) {
        for (Eigen::Index j = 0; j < samples.dim(); ++j) {
            if (j) out << ' ';
            out << format_full(samples.data(i, j));
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

inline SampleMatrix read_samples(const std::string& path, SampleFileHeader* header_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open for reading: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && !line.empty() && line[0] == '#') {
            if (header_out) {
                long long n = 0, cnt = 0;
                unsigned long long seed = 0;
                std::sscanf(line.c_str(), "# n=%lld N=%lld seed=%llu", &n, &cnt, &seed);
                header_out->n = n;
                header_out->count = cnt;
                header_out->seed = seed;
            }
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::io_error, "no samples in file: " + path);
    const std::size_t n = rows.front().size();
    RowMatrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n)
            throw Error(ErrorCode::io_error, "ragged sample file: " + path);
        for (std::size_t j = 0; j < n; ++j) data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    SampleMatrix m(std::move(data));
    m.validate();
    return m;
}

/** Matrix file: optional `# key=value ...` header line, then one row per line. */
inline void write_matrix(const std::string& path, const Matrix& m, const std::string& header = "") {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open for writing: " + path);
    if (!header.empty()) out << "# " << header << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_full(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::io_error, "write failed: " + path);
}

inline Matrix read_matrix(const std::string& path, std::string* header_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open for reading: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first && !line.empty() && line[0] == '#') {
            if (header_out) *header_out = line.substr(line.find_first_not_of("# "));
            first = false;
            continue;
        }
        first = false;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::io_error, "no matrix rows in file: " + path);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw Error(ErrorCode::io_error, "ragged matrix file: " + path);
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    if (!m.allFinite()) throw Error(ErrorCode::io_error, "matrix file has non-finite entries: " + path);
    return m;
}

}  // namespace htica

#endif  // HTICA_IO_HPP_

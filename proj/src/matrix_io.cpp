#include "eigrefine/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "eigrefine/errors.hpp"

namespace eigrefine::io {

namespace {

struct Header {
    bool symmetric = false;
};

std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

double parse_entry(const std::string& tok, const std::string& origin, long line_no) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(origin + ": invalid numeric literal '" + tok + "' at line " +
                             std::to_string(line_no),
                         line_no);
    }
    if (!std::isfinite(v)) {
        throw ParseError(origin + ": non-finite value at line " + std::to_string(line_no),
                         line_no);
    }
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

DenseMatrix read_matrix(std::istream& in, const std::string& origin) {
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw ParseError(origin + ": empty file", 1);
    ++line_no;
    const auto head = tokens(line);
    Header hdr;
    if (head.size() != 5 || head[0] != "%%MatrixMarket" || head[1] != "matrix" ||
        head[2] != "array" || head[3] != "real" ||
        (head[4] != "general" && head[4] != "symmetric")) {
        throw ParseError(origin + ": malformed MatrixMarket header (expected "
                                  "'%%MatrixMarket matrix array real general|symmetric')",
                         line_no);
    }
    hdr.symmetric = head[4] == "symmetric";

    // skip comments and blank lines, then read the dimension line
    std::size_t rows = 0, cols = 0;
    for (;;) {
        if (!std::getline(in, line)) {
            throw ParseError(origin + ": missing dimension line", line_no + 1);
        }
        ++line_no;
        if (!line.empty() && line[0] == '%') continue;
        const auto dims = tokens(line);
        if (dims.empty()) continue;
        if (dims.size() != 2) {
            throw ParseError(origin + ": dimension line must hold two integers", line_no);
        }
        auto parse_dim = [&](const std::string& t) -> std::size_t {
            std::size_t v = 0;
            auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
            if (ec != std::errc{} || ptr != t.data() + t.size() || v == 0) {
                throw ParseError(origin + ": invalid dimension '" + t + "'", line_no);
            }
            return v;
        };
        rows = parse_dim(dims[0]);
        cols = parse_dim(dims[1]);
        break;
    }
    if (hdr.symmetric && rows != cols) {
        throw ParseError(origin + ": symmetric matrix must be square", line_no);
    }

    const std::size_t expected =
        hdr.symmetric ? rows * (rows + 1) / 2 : rows * cols;
    std::vector<double> vals;
    vals.reserve(expected);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '%') continue;
        for (const auto& tok : tokens(line)) {
            if (vals.size() == expected) {
                throw ParseError(origin + ": more entries than the dimensions allow", line_no);
            }
            vals.push_back(parse_entry(tok, origin, line_no));
        }
    }
    if (vals.size() != expected) {
        throw ParseError(origin + ": expected " + std::to_string(expected) + " entries, got " +
                             std::to_string(vals.size()),
                         line_no);
    }

    DenseMatrix m(rows, cols);
    if (hdr.symmetric) {
        std::size_t k = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t i = j; i < rows; ++i) {
                m(i, j) = vals[k];
                m(j, i) = vals[k];
                ++k;
            }
        }
    } else {
        std::size_t k = 0;
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t i = 0; i < rows; ++i) m(i, j) = vals[k++];
    }
    return m;
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    return read_matrix(in, path.string());
}

SymMatrix read_sym_matrix(const std::filesystem::path& path) {
    DenseMatrix m = read_matrix(path);
    try {
        return SymMatrix(std::move(m));
    } catch (const Error& err) {
        throw ParseError(path.string() + ": not a symmetric matrix: " + err.what(), 0);
    }
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << " " << m.cols() << "\n";
    for (std::size_t j = 0; j < m.cols(); ++j)
        for (std::size_t i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << "\n";
}

void write_matrix(std::ostream& out, const SymMatrix& m) {
    out << "%%MatrixMarket matrix array real symmetric\n";
    out << m.n() << " " << m.n() << "\n";
    for (std::size_t j = 0; j < m.n(); ++j)
        for (std::size_t i = j; i < m.n(); ++i) out << format_double(m(i, j)) << "\n";
}

namespace {
template <typename M>
void write_file(const std::filesystem::path& path, const M& m) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_matrix(out, m);
    out.flush();
    if (!out) throw Error("write failed for '" + path.string() + "'");
}
} // namespace

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
    write_file(path, m);
}

void write_matrix(const std::filesystem::path& path, const SymMatrix& m) {
    write_file(path, m);
}

} // namespace eigrefine::io

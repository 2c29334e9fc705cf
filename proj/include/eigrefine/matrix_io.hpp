#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "eigrefine/types.hpp"

namespace eigrefine::io {

/// Reads a MatrixMarket dense-array file, `real general` or `real symmetric`.
/// Symmetric files store the lower triangle column by column and expand to the
/// full matrix. Throws ParseError (with line number) on malformed input,
/// dimension/entry-count mismatch or non-finite values.
DenseMatrix read_matrix(const std::filesystem::path& path);
DenseMatrix read_matrix(std::istream& in, const std::string& origin);

/// Reads a file that must describe a symmetric matrix: either `real symmetric`
/// storage, or `real general` whose content passes SymMatrix construction.
SymMatrix read_sym_matrix(const std::filesystem::path& path);

/// Writes `%%MatrixMarket matrix array real general`, column-major entries in
/// shortest round-trip decimal form.
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
void write_matrix(std::ostream& out, const DenseMatrix& m);

/// Writes `%%MatrixMarket matrix array real symmetric` (lower triangle).
void write_matrix(const std::filesystem::path& path, const SymMatrix& m);
void write_matrix(std::ostream& out, const SymMatrix& m);

/// Shortest decimal string that parses back to exactly the same binary64.
std::string format_double(double v);

} // namespace eigrefine::io

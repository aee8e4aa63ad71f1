#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "hybridcg/sparse/csr_matrix.hpp"

namespace hybridcg {

/// Reads a Matrix Market `coordinate real {general|symmetric}` stream.
///
/// Symmetric files are expanded to full storage, duplicate coordinates are
/// summed and rows come out sorted by column. Errors throw ParseError with the
/// offending line number.
CsrMatrix parse_matrix_market(std::istream& in);
CsrMatrix parse_matrix_market(std::string_view text);
CsrMatrix read_matrix_market(const std::filesystem::path& path);

}  // namespace hybridcg

#ifndef NCHMC_SERIALIZATION_HPP
#define NCHMC_SERIALIZATION_HPP

#include "nchmc/symplectic.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace nchmc {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

double parse_double(std::string_view text);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// {"n", "E", "A", "G"} plus "basisB" when a basis is given. Matrices are
/// row-major nested arrays.
nlohmann::json structure_to_json(const PoissonStructure& s,
                                 const DarbouxBasis* basis = nullptr);
PoissonStructure structure_from_json(const nlohmann::json& j);
/// Reads "basisB"; the change of basis is recomputed.
DarbouxBasis basis_from_json(const nlohmann::json& j);

/// Writes `text` to `path` via a temporary file and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace nchmc

#endif  // NCHMC_SERIALIZATION_HPP

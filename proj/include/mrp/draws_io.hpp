#ifndef MRP_DRAWS_IO_HPP
#define MRP_DRAWS_IO_HPP

#include <filesystem>

#include "json.hpp"
#include "mrp/inference.hpp"

namespace mrp {

nlohmann::json layout_to_json(const ParameterLayout& layout);
ParameterLayout layout_from_json(const nlohmann::json& blocks);

/// Writes `bin_path` (little-endian float64, row-major draws x parameters)
/// and a JSON header next to it (same stem, .json) naming blocks, offsets
/// and chain membership. `extra` is merged into the header.
void write_draws(const std::filesystem::path& bin_path, const PosteriorDraws& draws,
                 const nlohmann::json& extra = nlohmann::json::object());

struct DrawsFile {
  PosteriorDraws draws;
  nlohmann::json header;
};

/// Reads a draws file written by write_draws; `path` may name either the
/// .bin or the .json file.
DrawsFile read_draws(const std::filesystem::path& path);

}  // namespace mrp

#endif  // MRP_DRAWS_IO_HPP

#include "mrp/draws_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mrp/error.hpp"

namespace mrp {

namespace {

Transform parse_transform(const std::string& text) {
  if (text == "identity") return Transform::identity;
  if (text == "log") return Transform::log;
  if (text == "atanh") return Transform::atanh;
  throw InputError("draws header: unknown transform '" + text + "'");
}

void put_le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double get_le(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

nlohmann::json layout_to_json(const ParameterLayout& layout) {
  auto blocks = nlohmann::json::array();
  for (const auto& b : layout.blocks()) {
    nlohmann::json j{{"name", b.name},
                     {"offset", b.offset},
                     {"length", b.length},
                     {"transform", std::string(to_string(b.transform))}};
    if (!b.labels.empty()) j["labels"] = b.labels;
    blocks.push_back(std::move(j));
  }
  return blocks;
}

ParameterLayout layout_from_json(const nlohmann::json& blocks) {
  std::vector<Block> out;
  for (const auto& j : blocks) {
    Block b;
    b.name = j.at("name").get<std::string>();
    b.offset = j.at("offset").get<Index>();
    b.length = j.at("length").get<Index>();
    b.transform = parse_transform(j.value("transform", "identity"));
    if (j.contains("labels")) b.labels = j.at("labels").get<std::vector<std::string>>();
    out.push_back(std::move(b));
  }
  try {
    return ParameterLayout(std::move(out));
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("draws header: ") + e.what());
  }
}

void write_draws(const std::filesystem::path& bin_path, const PosteriorDraws& draws,
                 const nlohmann::json& extra) {
  {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + bin_path.string());
    for (Index d = 0; d < draws.draws.rows(); ++d) {
      for (Index p = 0; p < draws.draws.cols(); ++p) put_le(out, draws.draws(d, p));
    }
  }
  auto chains = nlohmann::json::array();
  for (std::size_t i = 0; i < draws.chain.size();) {
    std::size_t j = i;
    while (j < draws.chain.size() && draws.chain[j] == draws.chain[i]) ++j;
    chains.push_back({{"id", draws.chain[i]}, {"first", i}, {"count", j - i}});
    i = j;
  }
  nlohmann::json header{{"format", "mrp-draws"},
                        {"version", 1},
                        {"data_file", bin_path.filename().string()},
                        {"dtype", "float64"},
                        {"byte_order", "little"},
                        {"order", "row-major"},
                        {"rows", draws.draws.rows()},
                        {"cols", draws.draws.cols()},
                        {"method", draws.method},
                        {"divergences", draws.divergences},
                        {"blocks", layout_to_json(draws.layout)},
                        {"chains", chains}};
  for (const auto& [key, value] : extra.items()) header[key] = value;
  auto json_path = bin_path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + json_path.string());
  out << header.dump(2) << '\n';
}

DrawsFile read_draws(const std::filesystem::path& path) {
  auto json_path = path;
  json_path.replace_extension(".json");
  std::ifstream jin(json_path, std::ios::binary);
  if (!jin) throw InputError("cannot open draws header " + json_path.string());
  DrawsFile file;
  try {
    file.header = nlohmann::json::parse(jin);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("draws header " + json_path.string() + ": " + e.what());
  }
  const auto& h = file.header;
  if (h.value("format", "") != "mrp-draws") throw InputError(json_path.string() + ": not a draws header");
  const auto rows = h.at("rows").get<Index>();
  const auto cols = h.at("cols").get<Index>();
  auto bin_path = json_path.parent_path() / h.value("data_file", json_path.stem().string() + ".bin");

  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw InputError("cannot open draws data " + bin_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 8) {
    throw InputError(bin_path.string() + ": size does not match header (" + std::to_string(rows) + " x " +
                     std::to_string(cols) + ")");
  }
  auto& d = file.draws;
  d.draws.resize(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c, k += 8) d.draws(r, c) = get_le(bytes.data() + k);
  }
  d.layout = layout_from_json(h.at("blocks"));
  if (d.layout.size() != cols) throw InputError(json_path.string() + ": blocks do not cover all columns");
  d.method = h.value("method", "");
  d.divergences = h.value("divergences", 0);
  d.chain.assign(static_cast<std::size_t>(rows), 0);
  for (const auto& c : h.at("chains")) {
    const auto first = c.at("first").get<std::size_t>();
    const auto count = c.at("count").get<std::size_t>();
    if (first + count > d.chain.size()) throw InputError(json_path.string() + ": bad chain ranges");
    std::fill_n(d.chain.begin() + static_cast<std::ptrdiff_t>(first), count, c.at("id").get<int>());
  }
  return file;
}

}  // namespace mrp

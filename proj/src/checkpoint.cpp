#include "spinnwave/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace spinnwave {
namespace {

constexpr char kMagic[8] = {'S', 'P', 'W', 'N', 'C', 'K', 'P', 'T'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= std::uint64_t(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(const std::string& in, std::size_t at) {
  return std::bit_cast<double>(get_u64(in, at));
}

}  // namespace

std::string encode_checkpoint(const Mlp& params) {
  params.validate();
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["depth"] = params.depth();
  header["widths"] = params.widths();
  header["rng_seed"] = params.rng_seed;
  header["n_params"] = params.parameter_count();
  header["layout"] = "per layer: A row-major, then b; float64 little-endian";
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + 8 * static_cast<std::size_t>(params.parameter_count()));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& a = params.weights[l];
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) put_f64(out, a(i, j));
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) put_f64(out, params.biases[l](i));
  }
  return out;
}

Mlp decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (16 + header_len > bytes.size()) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  if (header.at("format_version").get<int>() != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version");
  const auto widths = header.at("widths").get<std::vector<Eigen::Index>>();
  if (widths.size() < 2 || static_cast<Eigen::Index>(widths.size()) - 1 !=
                               header.at("depth").get<Eigen::Index>())
    throw std::runtime_error("checkpoint: inconsistent depth/widths");

  Mlp params;
  params.rng_seed = header.at("rng_seed").get<std::uint64_t>();
  std::size_t at = 16 + header_len;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Eigen::Index rows = widths[l + 1], cols = widths[l];
    const std::size_t need = 8 * static_cast<std::size_t>(rows * cols + rows);
    if (at + need > bytes.size()) throw std::runtime_error("checkpoint: truncated data");
    Mlp::Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j, at += 8) a(i, j) = get_f64(bytes, at);
    Mlp::Vector b(rows);
    for (Eigen::Index i = 0; i < rows; ++i, at += 8) b(i) = get_f64(bytes, at);
    params.weights.push_back(std::move(a));
    params.biases.push_back(std::move(b));
  }
  if (at != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  params.validate();
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const Mlp& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  const std::string bytes = encode_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace spinnwave

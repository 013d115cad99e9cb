#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "fragflow/denoiser.hpp"

namespace fragflow {
namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw ParamsIoError("params file truncated");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 | std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}

}  // namespace

void save_params(const DenoiserParams<double>& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParamsIoError("cannot write params file " + path);
  put_u32(out, static_cast<std::uint32_t>(p.vocab));
  put_u32(out, static_cast<std::uint32_t>(p.dim));
  put_u32(out, static_cast<std::uint32_t>(p.num_blocks()));
  put_u32(out, kParamsVersion);
  for (const auto* m : p.arrays())
    for (Eigen::Index i = 0; i < m->size(); ++i)
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m->data()[i])));
  if (!out) throw ParamsIoError("write failed for " + path);
}

DenoiserParams<double> load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamsIoError("cannot read params file " + path);
  const auto vocab = get_u32(in), dim = get_u32(in), blocks = get_u32(in), version = get_u32(in);
  if (version != kParamsVersion) throw ParamsIoError("unsupported params version " + std::to_string(version));
  if (vocab < 2 || dim < 1 || vocab > (1U << 20) || dim > (1U << 14) || blocks > 1024)
    throw ParamsIoError("implausible params header");
  Rng unused(0);
  auto p = init_params<double>(static_cast<int>(vocab), static_cast<int>(dim), static_cast<int>(blocks), unused);
  for (auto* m : p.arrays())
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = static_cast<double>(std::bit_cast<float>(get_u32(in)));
  in.peek();
  if (!in.eof()) throw ParamsIoError("trailing bytes in params file");
  return p;
}

}  // namespace fragflow

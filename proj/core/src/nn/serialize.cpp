#include "rrforge/nn/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "rrforge/error.hpp"

namespace rrforge::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "RRF1 I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'R', 'F', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

void write_rrf1(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  out.write(kMagic, 4);
  for (const auto& [name, t] : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (const auto d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  require(static_cast<bool>(out), Errc::io_error, "failed writing RRF1 stream");
}

std::vector<NamedTensor> read_rrf1(std::istream& in) {
  char magic[4];
  require(in.read(magic, 4) && std::memcmp(magic, kMagic, 4) == 0, Errc::invalid_argument, "not an RRF1 file");
  std::vector<NamedTensor> tensors;
  std::uint32_t name_len = 0;
  while (get(in, name_len)) {
    require(name_len < (1u << 16), Errc::invalid_argument, "RRF1 record name too long");
    std::string name(name_len, '\0');
    std::uint32_t rank = 0;
    require(in.read(name.data(), name_len) && get(in, rank) && rank <= 8, Errc::invalid_argument,
            "truncated RRF1 record header");
    std::vector<std::size_t> dims(rank);
    std::uint64_t count = 1;
    for (auto& d : dims) {
      std::uint64_t v = 0;
      require(get(in, v), Errc::invalid_argument, "truncated RRF1 dims for " + name);
      d = static_cast<std::size_t>(v);
      count *= v;
    }
    require(count < (1ull << 32), Errc::invalid_argument, "RRF1 record too large: " + name);
    std::vector<double> payload(static_cast<std::size_t>(count));
    require(static_cast<bool>(in.read(reinterpret_cast<char*>(payload.data()),
                                      static_cast<std::streamsize>(count * sizeof(double)))),
            Errc::invalid_argument, "truncated RRF1 payload for " + name);
    tensors.push_back({std::move(name), Tensor(std::move(dims), std::move(payload))});
  }
  return tensors;
}

void save_rrf1(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  write_rrf1(out, tensors);
}

std::vector<NamedTensor> load_rrf1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  return read_rrf1(in);
}

}  // namespace rrforge::nn

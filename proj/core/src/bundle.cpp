#include "rrforge/bundle.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rrforge/error.hpp"

namespace rrforge {
namespace {

static_assert(std::endian::native == std::endian::little, "bundle I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'R', 'S', '1'};

void put_string(std::ostream& out, const std::string& s) {
  const auto n = static_cast<std::uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

bool get_string(std::istream& in, std::string& s, bool allow_eof) {
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (in.gcount() == 0 && allow_eof && in.eof()) return false;
  require(in.gcount() == sizeof n, Errc::io_error, "truncated bundle record");
  require(n < (1u << 20), Errc::io_error, "implausible identifier length in bundle record");
  s.resize(n);
  in.read(s.data(), n);
  require(static_cast<std::uint32_t>(in.gcount()) == n, Errc::io_error, "truncated bundle record");
  return true;
}

}  // namespace

void write_bundles(std::ostream& out, std::span<const SegmentBundle> bundles) {
  out.write(kMagic, 4);
  for (const auto& b : bundles) {
    require(b.channels.size() == kBundleChannels * kWindowSamples, Errc::invalid_shape,
            "bundle " + b.segment_id + " does not hold 3 x 3200 samples");
    put_string(out, b.subject_id);
    put_string(out, b.segment_id);
    out.write(reinterpret_cast<const char*>(b.channels.data()),
              static_cast<std::streamsize>(b.channels.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(&b.label), sizeof b.label);
  }
  require(out.good(), Errc::io_error, "failed writing bundle store");
}

std::vector<SegmentBundle> read_bundles(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  require(in.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0, Errc::io_error, "not an RRS1 bundle store");
  std::vector<SegmentBundle> out;
  for (;;) {
    SegmentBundle b;
    if (!get_string(in, b.subject_id, true)) break;
    get_string(in, b.segment_id, false);
    const auto bytes = static_cast<std::streamsize>(b.channels.size() * sizeof(float));
    in.read(reinterpret_cast<char*>(b.channels.data()), bytes);
    in.read(reinterpret_cast<char*>(&b.label), sizeof b.label);
    require(in.good() || (in.eof() && in.gcount() == sizeof b.label), Errc::io_error, "truncated bundle record");
    out.push_back(std::move(b));
  }
  return out;
}

void save_bundles(const std::filesystem::path& path, std::span<const SegmentBundle> bundles) {
  std::ofstream out(path, std::ios::binary);
  require(out.is_open(), Errc::io_error, "cannot open " + path.string() + " for writing");
  write_bundles(out, bundles);
}

std::vector<SegmentBundle> load_bundles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.is_open(), Errc::io_error, "cannot open " + path.string());
  return read_bundles(in);
}

}  // namespace rrforge

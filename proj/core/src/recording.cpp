#include "rrforge/recording.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rrforge/error.hpp"

namespace rrforge {
namespace {

std::vector<std::string> split_header(const std::string& line) {
  std::vector<std::string> cols;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cols.push_back(cell);
  }
  return cols;
}

// Returns columns in file order; validates the header against `expected`.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path,
                                            const std::vector<std::string>& expected) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io_error, "cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::invalid_argument, path.string() + ": missing header");
  const auto header = split_header(line);
  require(header == expected, Errc::invalid_argument, path.string() + ": unexpected CSV header '" + line + "'");

  std::vector<std::vector<double>> cols(expected.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < cols.size(); ++c) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      require(ec == std::errc(), Errc::invalid_argument,
              path.string() + ": bad number on row " + std::to_string(row));
      cols[c].push_back(v);
      p = next;
      while (p < end && (*p == ' ' || *p == '\r')) ++p;
      if (c + 1 < cols.size()) {
        require(p < end && *p == ',', Errc::invalid_argument,
                path.string() + ": too few columns on row " + std::to_string(row));
        ++p;
      }
    }
  }
  require(cols[0].size() >= 2, Errc::invalid_argument, path.string() + ": need at least two rows");
  return cols;
}

double infer_rate(const std::vector<double>& t, const std::filesystem::path& path) {
  for (std::size_t i = 1; i < t.size(); ++i) {
    require(t[i] > t[i - 1], Errc::invalid_argument,
            path.string() + ": time column is not strictly increasing at row " + std::to_string(i + 2));
  }
  return static_cast<double>(t.size() - 1) / (t.back() - t.front());
}

void put(std::string& out, double v, const char* fmt = "%.7g") {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, fmt, v);
  out.append(buf, static_cast<std::size_t>(n));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io_error, "cannot write " + path.string());
  out << text;
}

}  // namespace

WristRecording read_wrist_csv(const std::filesystem::path& path) {
  const auto cols = read_table(path, {"t", "ppg", "acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"});
  const double rate = infer_rate(cols[0], path);
  WristRecording rec;
  rec.ppg = SampledSignal{cols[1], rate, cols[0].front()};
  rec.acc = TriaxialWindow{cols[2], cols[3], cols[4], rate};
  rec.gyr = TriaxialWindow{cols[5], cols[6], cols[7], rate};
  return rec;
}

ChestRecording read_chest_csv(const std::filesystem::path& path) {
  const auto cols = read_table(path, {"t", "acc_x", "acc_y", "acc_z"});
  const double rate = infer_rate(cols[0], path);
  return ChestRecording{TriaxialWindow{cols[1], cols[2], cols[3], rate}, cols[0].front()};
}

void write_wrist_csv(const std::filesystem::path& path, const WristRecording& rec) {
  rec.acc.validate();
  rec.gyr.validate();
  const std::size_t n = rec.ppg.size();
  require(rec.acc.size() == n && rec.gyr.size() == n, Errc::invalid_shape, "wrist channels differ in length");
  std::string out = "t,ppg,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z\n";
  out.reserve(n * 80);
  for (std::size_t i = 0; i < n; ++i) {
    put(out, rec.ppg.start_time + static_cast<double>(i) / rec.ppg.rate, "%.10g");
    for (const double v : {rec.ppg.samples[i], rec.acc.x[i], rec.acc.y[i], rec.acc.z[i], rec.gyr.x[i],
                           rec.gyr.y[i], rec.gyr.z[i]}) {
      out += ',';
      put(out, v);
    }
    out += '\n';
  }
  write_text(path, out);
}

void write_chest_csv(const std::filesystem::path& path, const ChestRecording& rec) {
  rec.acc.validate();
  const std::size_t n = rec.acc.size();
  std::string out = "t,acc_x,acc_y,acc_z\n";
  out.reserve(n * 40);
  for (std::size_t i = 0; i < n; ++i) {
    put(out, rec.start_time + static_cast<double>(i) / rec.acc.rate, "%.10g");
    for (const double v : {rec.acc.x[i], rec.acc.y[i], rec.acc.z[i]}) {
      out += ',';
      put(out, v);
    }
    out += '\n';
  }
  write_text(path, out);
}

}  // namespace rrforge

// SPDX-License-Identifier: Apache-2.0
#include "eadvc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eadvc/common.hpp"

namespace eadvc::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
void put_u32(std::ofstream& o, std::uint32_t v) { o.write(reinterpret_cast<char*>(&v), 4); }
void put_u16(std::ofstream& o, std::uint16_t v) { o.write(reinterpret_cast<char*>(&v), 2); }
std::uint32_t get_u32(std::ifstream& i) {
  std::uint32_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
std::uint16_t get_u16(std::ifstream& i) {
  std::uint16_t v = 0;
  i.read(reinterpret_cast<char*>(&v), 2);
  return v;
}
}  // namespace

void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Err::IoError, "cannot write wav " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : samples) {
    double clipped = std::clamp(s, -1.0, 1.0);
    auto q = static_cast<std::int16_t>(std::lrint(clipped * 32767.0));
    out.write(reinterpret_cast<char*>(&q), 2);
  }
  require(out.good(), Err::IoError, "short write on " + path);
}

std::pair<std::vector<double>, int> read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::MissingAudio, path);
  char tag[5] = {0};
  in.read(tag, 4);
  require(std::strncmp(tag, "RIFF", 4) == 0, Err::IoError, path + ": not a RIFF file");
  get_u32(in);
  in.read(tag, 4);
  require(std::strncmp(tag, "WAVE", 4) == 0, Err::IoError, path + ": not a WAVE file");

  int sample_rate = 0, channels = 0, bits = 0;
  std::vector<double> samples;
  while (in.read(tag, 4)) {
    std::uint32_t size = get_u32(in);
    if (std::strncmp(tag, "fmt ", 4) == 0) {
      std::uint16_t fmt = get_u16(in);
      channels = get_u16(in);
      sample_rate = static_cast<int>(get_u32(in));
      get_u32(in);
      get_u16(in);
      bits = get_u16(in);
      require(fmt == 1 && bits == 16 && channels == 1, Err::IoError,
              path + ": only 16-bit PCM mono supported");
      if (size > 16) in.seekg(size - 16, std::ios::cur);
    } else if (std::strncmp(tag, "data", 4) == 0) {
      const std::uint32_t n = size / 2;
      samples.resize(n);
      for (std::uint32_t i = 0; i < n; ++i) {
        std::int16_t q = 0;
        in.read(reinterpret_cast<char*>(&q), 2);
        samples[i] = static_cast<double>(q) / 32767.0;
      }
      break;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  require(sample_rate > 0 && !samples.empty(), Err::IoError, path + ": missing fmt/data chunk");
  return {std::move(samples), sample_rate};
}

void save_array(const std::string& base, const nn::Mat& m, const std::string& config_hash) {
  std::ofstream out(base + ".bin", std::ios::binary);
  require(out.good(), Err::IoError, "cannot write " + base + ".bin");
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      out.write(reinterpret_cast<char*>(&v), sizeof(double));
    }
  json j{{"rows", m.rows()},
         {"cols", m.cols()},
         {"dtype", "f8"},
         {"order", "row-major"},
         {"config_hash", config_hash}};
  std::ofstream side(base + ".json");
  side << j.dump(2) << "\n";
  require(side.good(), Err::IoError, "cannot write " + base + ".json");
}

nn::Mat load_array(const std::string& base, std::string* config_hash) {
  std::ifstream side(base + ".json");
  require(side.good(), Err::IoError, "missing sidecar " + base + ".json");
  json j = json::parse(side);
  const long rows = j.at("rows").get<long>(), cols = j.at("cols").get<long>();
  if (config_hash) *config_hash = j.value("config_hash", "");
  std::ifstream in(base + ".bin", std::ios::binary);
  require(in.good(), Err::IoError, "missing array " + base + ".bin");
  nn::Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long jc = 0; jc < cols; ++jc) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(i, jc) = v;
    }
  require(in.good(), Err::IoError, base + ".bin truncated");
  return m;
}

CsvLog::CsvLog(const std::string& path) : out_(path) {
  require(out_.good(), Err::IoError, "cannot open log " + path);
  out_ << "step,name,value\n";
}

void CsvLog::row(long step, const std::string& name, double value) {
  out_ << step << "," << name << "," << format_double(value) << "\n";
}

std::uint64_t hash_tree(const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) paths.push_back(fs::relative(e.path(), dir).string());
  std::sort(paths.begin(), paths.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& rel : paths) {
    h = fnv1a(rel.data(), rel.size(), h);
    std::string data = read_text_file((fs::path(dir) / rel).string());
    h = fnv1a(data.data(), data.size(), h);
  }
  return h;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Err::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace eadvc::io

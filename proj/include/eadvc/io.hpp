// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "eadvc/nn/tensor.hpp"

namespace eadvc::io {

// 16-bit PCM mono WAV.
void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate);
std::pair<std::vector<double>, int> read_wav(const std::string& path);

// Flat binary array (row-major float64) plus a JSON sidecar with shape and
// config hash: <base>.bin / <base>.json.
void save_array(const std::string& base, const nn::Mat& m, const std::string& config_hash);
nn::Mat load_array(const std::string& base, std::string* config_hash = nullptr);

// Streaming training log: "step,name,value" rows with fixed float formatting
// so identical runs produce byte-identical files.
class CsvLog {
 public:
  explicit CsvLog(const std::string& path);
  void row(long step, const std::string& name, double value);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

// FNV hash of a whole directory tree (sorted relative paths + contents).
std::uint64_t hash_tree(const std::string& dir);

std::string read_text_file(const std::string& path);

}  // namespace eadvc::io

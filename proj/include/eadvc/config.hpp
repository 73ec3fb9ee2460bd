// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "eadvc/common.hpp"

namespace eadvc {

// Flat key-value run configuration ("section.key = value" lines). Every key
// must exist in the built-in registry; unknown keys are rejected before any
// compute happens. The model hash covers architecture-defining keys
// (audio.* and model.*) and is embedded in checkpoints.
class Config {
 public:
  static Config defaults();
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  void apply_line(const std::string& line);  // "key = value" (or "key=value")

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double get_f(const std::string& key) const;
  long get_i(const std::string& key) const;
  bool get_b(const std::string& key) const;
  const std::string& get_s(const std::string& key) const;

  std::string serialize() const;  // canonical: sorted keys, "key = value\n"
  void save(const std::string& path) const;
  std::string model_hash() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace eadvc

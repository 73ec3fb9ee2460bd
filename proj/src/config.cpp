// SPDX-License-Identifier: Apache-2.0
#include "eadvc/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace eadvc {

namespace {

enum class KeyType { Float, Int, Bool, Str };

struct KeySpec {
  KeyType type;
  const char* default_value;
};

// Single source of truth for every configuration key.
const std::map<std::string, KeySpec>& registry() {
  static const std::map<std::string, KeySpec> reg = {
      {"audio.sample_rate", {KeyType::Int, "16000"}},
      {"audio.n_fft", {KeyType::Int, "1024"}},
      {"audio.win_ms", {KeyType::Float, "50"}},
      {"audio.hop_ms", {KeyType::Float, "12.5"}},
      {"audio.n_mels", {KeyType::Int, "80"}},
      {"audio.fmin", {KeyType::Float, "40"}},
      {"audio.fmax", {KeyType::Float, "7600"}},
      {"audio.log_floor", {KeyType::Float, "1e-5"}},
      {"aug.max_semitones", {KeyType::Float, "4"}},
      {"aug.max_rate", {KeyType::Float, "1.5"}},
      {"aug.gamma_lo", {KeyType::Float, "0.1"}},
      {"aug.gamma_hi", {KeyType::Float, "0.9"}},
      {"aug.warp_lo", {KeyType::Float, "0.8"}},
      {"aug.warp_hi", {KeyType::Float, "1.25"}},
      {"aug.cache_variants", {KeyType::Int, "2"}},
      {"model.d_content", {KeyType::Int, "64"}},
      {"model.d_pitch", {KeyType::Int, "32"}},
      {"model.d_rhythm", {KeyType::Int, "32"}},
      {"model.d_speaker", {KeyType::Int, "32"}},
      {"model.d_hidden", {KeyType::Int, "64"}},
      {"model.d_att", {KeyType::Int, "32"}},
      {"model.d_value", {KeyType::Int, "32"}},
      {"model.asr_hidden", {KeyType::Int, "96"}},
      {"model.d_bnf", {KeyType::Int, "64"}},
      {"model.asr_vocab", {KeyType::Int, "24"}},
      {"model.adapter_hidden", {KeyType::Int, "16"}},
      {"model.dec_hidden", {KeyType::Int, "256"}},
      {"model.fusion", {KeyType::Str, "sat"}},
      {"model.gl_iters", {KeyType::Int, "60"}},
      {"loss.alpha1", {KeyType::Float, "0.01"}},
      {"loss.alpha2", {KeyType::Float, "1.0"}},
      {"loss.alpha3", {KeyType::Float, "0.1"}},
      {"loss.alpha4", {KeyType::Float, "1.0"}},
      {"loss.temperature", {KeyType::Float, "0.1"}},
      {"loss.grl_lambda", {KeyType::Float, "1.0"}},
      {"loss.beta_start", {KeyType::Float, "1.0"}},
      {"loss.beta_end", {KeyType::Float, "0.5"}},
      {"loss.eps_clamp", {KeyType::Float, "1e-7"}},
      {"loss.adv_sign", {KeyType::Str, "standard"}},
      {"loss.infonce_normalize", {KeyType::Bool, "true"}},
      {"mi.critic_lr", {KeyType::Float, "1e-4"}},
      {"mi.critic_hidden", {KeyType::Int, "64"}},
      {"mi.critic_steps", {KeyType::Int, "1"}},
      {"mi.samples", {KeyType::Int, "128"}},
      {"mi.ifub_literal", {KeyType::Bool, "false"}},
      {"train.batch_size", {KeyType::Int, "16"}},
      {"train.stage1_steps", {KeyType::Int, "10000"}},
      {"train.stage2_steps", {KeyType::Int, "20000"}},
      {"train.asr_steps", {KeyType::Int, "5000"}},
      {"train.stage1_lr", {KeyType::Float, "3e-4"}},
      {"train.stage2_lr", {KeyType::Float, "1e-3"}},
      {"train.asr_lr", {KeyType::Float, "1e-3"}},
      {"train.warmup_frac", {KeyType::Float, "0.05"}},
      {"train.cosine_floor", {KeyType::Float, "0.05"}},
      {"train.seed", {KeyType::Int, "1234"}},
      {"train.axis_isolated_frac", {KeyType::Float, "0.5"}},
      {"corpus.n_speakers", {KeyType::Int, "12"}},
      {"corpus.utts_per_speaker", {KeyType::Int, "30"}},
      {"corpus.seed", {KeyType::Int, "7"}},
  };
  return reg;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void check_type(const std::string& key, KeyType type, const std::string& value) {
  char* end = nullptr;
  switch (type) {
    case KeyType::Float:
      std::strtod(value.c_str(), &end);
      require(end && *end == '\0' && !value.empty(), Err::InvalidConfig,
              "key " + key + " expects a number, got '" + value + "'");
      break;
    case KeyType::Int:
      std::strtol(value.c_str(), &end, 10);
      require(end && *end == '\0' && !value.empty(), Err::InvalidConfig,
              "key " + key + " expects an integer, got '" + value + "'");
      break;
    case KeyType::Bool:
      require(value == "true" || value == "false", Err::InvalidConfig,
              "key " + key + " expects true/false, got '" + value + "'");
      break;
    case KeyType::Str:
      break;
  }
}

}  // namespace

Config Config::defaults() {
  Config c;
  for (const auto& [key, spec] : registry()) c.values_[key] = spec.default_value;
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Err::IoError, "cannot open config file " + path);
  Config c = defaults();
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    c.apply_line(t);
  }
  return c;
}

void Config::apply_line(const std::string& line) {
  auto eq = line.find('=');
  require(eq != std::string::npos, Err::InvalidConfig, "expected 'key = value': " + line);
  set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = registry().find(key);
  require(it != registry().end(), Err::InvalidConfig, "unknown config key '" + key + "'");
  check_type(key, it->second.type, value);
  values_[key] = value;
}

double Config::get_f(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), Err::InvalidConfig, "missing config key " + key);
  return std::strtod(it->second.c_str(), nullptr);
}

long Config::get_i(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), Err::InvalidConfig, "missing config key " + key);
  return std::strtol(it->second.c_str(), nullptr, 10);
}

bool Config::get_b(const std::string& key) const { return get_s(key) == "true"; }

const std::string& Config::get_s(const std::string& key) const {
  auto it = values_.find(key);
  require(it != values_.end(), Err::InvalidConfig, "missing config key " + key);
  return it->second;
}

std::string Config::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
  return out.str();
}

void Config::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), Err::IoError, "cannot write config to " + path);
  out << serialize();
}

std::string Config::model_hash() const {
  std::ostringstream out;
  for (const auto& [key, value] : values_)
    if (key.rfind("audio.", 0) == 0 || key.rfind("model.", 0) == 0)
      out << key << "=" << value << ";";
  const std::string s = out.str();
  return hex64(fnv1a(s.data(), s.size()));
}

}  // namespace eadvc

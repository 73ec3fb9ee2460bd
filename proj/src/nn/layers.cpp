// SPDX-License-Identifier: Apache-2.0
#include "eadvc/nn/layers.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace eadvc::nn {

namespace fs = std::filesystem;
using nlohmann::json;

Tensor ParamStore::add(const std::string& name, Mat init) {
  require(!params_.count(name), Err::InvalidConfig, "duplicate parameter " + name);
  Tensor t(std::move(init), true);
  params_.emplace(name, t);
  trainable_[name] = true;
  return t;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  require(it != params_.end(), Err::InvalidConfig, "unknown parameter " + name);
  return it->second;
}

void ParamStore::set_trainable_prefix(const std::string& prefix, bool trainable) {
  for (auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) == 0) {
      trainable_[name] = trainable;
      t.set_requires_grad(trainable);
    }
  }
}

bool ParamStore::is_trainable(const std::string& name) const {
  auto it = trainable_.find(name);
  return it != trainable_.end() && it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

long ParamStore::param_count(const std::string& prefix) const {
  long n = 0;
  for (const auto& [name, t] : params_)
    if (name.rfind(prefix, 0) == 0) n += t.rows() * t.cols();
  return n;
}

long ParamStore::trainable_count() const {
  long n = 0;
  for (const auto& [name, t] : params_)
    if (is_trainable(name)) n += t.rows() * t.cols();
  return n;
}

std::uint64_t ParamStore::fingerprint(const std::string& prefix) const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) != 0) continue;
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(t.value().data(), sizeof(double) * t.rows() * t.cols(), h);
  }
  return h;
}

Mat he_init(Rng& rng, long rows, long cols) {
  Mat m(rows, cols);
  const double s = std::sqrt(2.0 / static_cast<double>(cols));
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = rng.gaussian() * s;
  return m;
}

Mat scaled_init(Rng& rng, long rows, long cols, double scale) {
  Mat m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = rng.gaussian() * scale;
  return m;
}

Linear Linear::create(ParamStore& store, const std::string& name, long in, long out, Rng& rng,
                      double scale) {
  Linear l;
  l.w = store.add(name + ".w", scale > 0 ? scaled_init(rng, out, in, scale)
                                         : he_init(rng, out, in));
  l.b = store.add(name + ".b", Mat::Zero(1, out));
  return l;
}

Conv1d Conv1d::create(ParamStore& store, const std::string& name, long cin, long cout, int k,
                      Rng& rng) {
  Conv1d c;
  c.k = k;
  c.w = store.add(name + ".w", he_init(rng, cout, cin * k));
  c.b = store.add(name + ".b", Mat::Zero(1, cout));
  return c;
}

void Adam::step(ParamStore& store, double lr,
                const std::function<bool(const std::string&)>& filter) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, p] : store.all()) {
    if (!store.is_trainable(name)) continue;
    if (filter && !filter(name)) continue;
    Tensor t = p;
    if (!t.has_grad()) continue;
    auto& [m, v] = slots_[name];
    if (m.size() == 0) {
      m = Mat::Zero(t.rows(), t.cols());
      v = Mat::Zero(t.rows(), t.cols());
    }
    const Mat& g = t.grad();
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    Mat mh = m / bc1;
    Mat vh = v / bc2;
    t.raw_value().array() -= lr * mh.array() / (vh.array().sqrt() + eps_);
  }
}

namespace {
void write_blob(std::ofstream& out, const Mat& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}
Mat read_blob(std::ifstream& in, long rows, long cols) {
  Mat m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  require(in.good(), Err::IoError, "checkpoint weights truncated");
  return m;
}
}  // namespace

void CheckpointIo::save(const std::string& dir, const ParamStore& store, const Adam* opt,
                        const CheckpointMeta& meta) {
  fs::create_directories(dir);
  std::ofstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
  require(wf.good(), Err::IoError, "cannot write " + dir + "/weights.bin");
  json tensors = json::array();
  long offset = 0;
  for (const auto& [name, t] : store.all()) {
    tensors.push_back({{"name", name},
                       {"rows", t.rows()},
                       {"cols", t.cols()},
                       {"offset", offset},
                       {"trainable", store.is_trainable(name)}});
    write_blob(wf, t.value());
    offset += t.rows() * t.cols();
  }
  json opt_tensors = json::array();
  long opt_t = 0;
  if (opt) {
    opt_t = opt->t_;
    for (const auto& [name, mv] : opt->slots_) {
      opt_tensors.push_back({{"name", name},
                             {"rows", mv.first.rows()},
                             {"cols", mv.first.cols()},
                             {"offset", offset}});
      write_blob(wf, mv.first);
      write_blob(wf, mv.second);
      offset += 2 * mv.first.size();
    }
  }
  json j{{"format", "eadvc-ckpt-1"},
         {"step", meta.step},
         {"stage", meta.stage},
         {"config_hash", meta.config_hash},
         {"tensors", tensors},
         {"opt", {{"t", opt_t}, {"tensors", opt_tensors}}}};
  std::ofstream mf(fs::path(dir) / "meta.json");
  mf << j.dump(2) << "\n";
  require(mf.good(), Err::IoError, "cannot write " + dir + "/meta.json");
}

CheckpointMeta CheckpointIo::read_meta(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  require(mf.good(), Err::IoError, "missing checkpoint meta at " + dir);
  json j = json::parse(mf, nullptr, false);
  require(!j.is_discarded() && j.value("format", "") == "eadvc-ckpt-1", Err::IoError,
          "unrecognized checkpoint format in " + dir);
  CheckpointMeta meta;
  meta.step = j.at("step").get<long>();
  meta.stage = j.at("stage").get<std::string>();
  meta.config_hash = j.at("config_hash").get<std::string>();
  return meta;
}

CheckpointMeta CheckpointIo::load(const std::string& dir, ParamStore& store, Adam* opt) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  require(mf.good(), Err::IoError, "missing checkpoint meta at " + dir);
  json j = json::parse(mf);
  CheckpointMeta meta;
  meta.step = j.at("step").get<long>();
  meta.stage = j.at("stage").get<std::string>();
  meta.config_hash = j.at("config_hash").get<std::string>();

  std::ifstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
  require(wf.good(), Err::IoError, "missing checkpoint weights at " + dir);
  for (const auto& tj : j.at("tensors")) {
    const auto name = tj.at("name").get<std::string>();
    const long rows = tj.at("rows").get<long>(), cols = tj.at("cols").get<long>();
    wf.seekg(static_cast<std::streamoff>(tj.at("offset").get<long>() * sizeof(double)));
    Mat m = read_blob(wf, rows, cols);
    require(store.has(name), Err::ConfigMismatch,
            "checkpoint tensor " + name + " has no matching model parameter");
    Tensor t = store.get(name);
    require(t.rows() == rows && t.cols() == cols, Err::ConfigMismatch,
            "checkpoint tensor " + name + " shape mismatch");
    t.raw_value() = m;
  }
  if (opt) {
    opt->t_ = j.at("opt").at("t").get<long>();
    for (const auto& tj : j.at("opt").at("tensors")) {
      const auto name = tj.at("name").get<std::string>();
      const long rows = tj.at("rows").get<long>(), cols = tj.at("cols").get<long>();
      wf.seekg(static_cast<std::streamoff>(tj.at("offset").get<long>() * sizeof(double)));
      Mat m = read_blob(wf, rows, cols);
      Mat v = read_blob(wf, rows, cols);
      opt->slots_[name] = {std::move(m), std::move(v)};
    }
  }
  return meta;
}

}  // namespace eadvc::nn

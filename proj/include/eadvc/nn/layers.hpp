// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>

#include "eadvc/common.hpp"
#include "eadvc/nn/ops.hpp"
#include "eadvc/nn/tensor.hpp"

namespace eadvc::nn {

// Named parameter registry. Iteration is always in name order, which makes
// checkpoints, optimizer sweeps and fingerprints deterministic.
class ParamStore {
 public:
  Tensor add(const std::string& name, Mat init);
  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }

  const std::map<std::string, Tensor>& all() const { return params_; }

  void set_trainable_prefix(const std::string& prefix, bool trainable);
  bool is_trainable(const std::string& name) const;

  void zero_grad();
  long param_count(const std::string& prefix = "") const;
  long trainable_count() const;

  // FNV-1a over raw value bytes of every parameter whose name starts with
  // `prefix`, in name order. Used by the freeze/alternation contract tests.
  std::uint64_t fingerprint(const std::string& prefix = "") const;

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, bool> trainable_;
};

Mat he_init(Rng& rng, long rows, long cols);
Mat scaled_init(Rng& rng, long rows, long cols, double scale);

struct Linear {
  Tensor w, b;  // w: out x in, b: 1 x out
  static Linear create(ParamStore& store, const std::string& name, long in, long out, Rng& rng,
                       double scale = 0.0);  // scale<=0 -> He init
  Tensor operator()(const Tensor& x) const { return affine(x, w, b); }
};

struct Conv1d {
  Tensor w, b;  // w: out x (in*k)
  int k = 1;
  static Conv1d create(ParamStore& store, const std::string& name, long cin, long cout, int k,
                       Rng& rng);
  Tensor operator()(const Tensor& x) const { return conv1d_same(x, w, b, k); }
};

// Adam with per-parameter slots keyed by name; skips parameters the filter
// rejects so disjoint groups (main model vs critics) can share a store.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& store, double lr,
            const std::function<bool(const std::string&)>& filter = nullptr);

  long t() const { return t_; }
  const std::map<std::string, std::pair<Mat, Mat>>& slots() const { return slots_; }

  friend struct CheckpointIo;

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::map<std::string, std::pair<Mat, Mat>> slots_;
};

struct CheckpointMeta {
  long step = 0;
  std::string stage;
  std::string config_hash;
};

// Checkpoint = directory {weights.bin, meta.json}. Raw little-endian doubles,
// so save -> load reproduces forward passes bitwise.
struct CheckpointIo {
  static void save(const std::string& dir, const ParamStore& store, const Adam* opt,
                   const CheckpointMeta& meta);
  // Loads every checkpoint tensor into the matching store parameter (strict
  // name and shape match). Parameters absent from the checkpoint are left
  // untouched, which is how stage-2 models ingest stage-1 hosts.
  static CheckpointMeta load(const std::string& dir, ParamStore& store, Adam* opt = nullptr);
  static CheckpointMeta read_meta(const std::string& dir);
};

}  // namespace eadvc::nn

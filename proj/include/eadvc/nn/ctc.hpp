// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "eadvc/nn/tensor.hpp"

namespace eadvc::nn {

// Alignment-free sequence loss (forward-backward in log space). `logits` is
// T x (V+1) with the blank as the last column; labels are in [0, V).
// Returns -log P(labels | logits), not length-normalized.
Tensor ctc_loss(const Tensor& logits, const std::vector<int>& labels, int blank);

// Best-path decode: per-frame argmax, collapse repeats, drop blanks.
std::vector<int> ctc_greedy_decode(const Mat& logits, int blank);

}  // namespace eadvc::nn

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "eadvc/nn/tensor.hpp"

namespace eadvc::nn {

Tensor constant(Mat v);

// elementwise / scalar
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor square(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi);

// linear algebra / shape
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, long r0, long n);
Tensor slice_cols(const Tensor& a, long c0, long n);
Tensor broadcast_row(const Tensor& row, long t);  // 1xC -> TxC
Tensor reshape_rowmajor(const Tensor& a, long r, long c);
Tensor repeat_rows_interleave(const Tensor& a, long times);  // rows aaa bbb ...
Tensor tile_rows(const Tensor& a, long times);               // rows abc abc ...
Tensor diag_col(const Tensor& a);                            // NxN -> Nx1

// reductions
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor mean_rows(const Tensor& a);     // TxC -> 1xC (mean over time)
Tensor row_softmax(const Tensor& a);   // softmax within each row
Tensor logsumexp_rows(const Tensor& a);  // TxC -> Tx1

// network building blocks
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);  // x*W^T + b
Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b, int k);
Tensor embedding(const Tensor& table, const std::vector<int>& ids);
Tensor repeat_rows_by(const Tensor& a, const std::vector<int>& durations);
Tensor l2_normalize_rows(const Tensor& a);

// losses & training utilities
Tensor mean_abs_diff(const Tensor& a, const Tensor& b);
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets);
Tensor grl(const Tensor& x, double lambda);  // identity fwd, -lambda * grad bwd
Tensor detach(const Tensor& x);

}  // namespace eadvc::nn

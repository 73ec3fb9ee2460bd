// SPDX-License-Identifier: Apache-2.0
#include "eadvc/nn/ops.hpp"

#include <cmath>

#include "eadvc/common.hpp"

namespace eadvc::nn {

using detail::accumulate;
using detail::Node;

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), Err::ShapeMismatch,
          std::string(op) + ": operand shapes differ");
}
}  // namespace

Tensor constant(Mat v) { return Tensor(std::move(v), false); }

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto pa = a.node(), pb = b.node();
  return make_op(a.value() + b.value(), {a, b}, [pa, pb](Node& n) {
    accumulate(pa, n.grad);
    accumulate(pb, n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto pa = a.node(), pb = b.node();
  return make_op(a.value() - b.value(), {a, b}, [pa, pb](Node& n) {
    accumulate(pa, n.grad);
    accumulate(pb, Mat(-n.grad));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto pa = a.node(), pb = b.node();
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [pa, pb](Node& n) {
    accumulate(pa, Mat(n.grad.cwiseProduct(pb->value)));
    accumulate(pb, Mat(n.grad.cwiseProduct(pa->value)));
  });
}

Tensor scale(const Tensor& a, double s) {
  auto pa = a.node();
  return make_op(a.value() * s, {a}, [pa, s](Node& n) { accumulate(pa, Mat(n.grad * s)); });
}

Tensor add_scalar(const Tensor& a, double c) {
  auto pa = a.node();
  return make_op(a.value().array() + c, {a}, [pa](Node& n) { accumulate(pa, n.grad); });
}

Tensor relu(const Tensor& a) {
  auto pa = a.node();
  return make_op(a.value().cwiseMax(0.0), {a}, [pa](Node& n) {
    Mat g = (pa->value.array() > 0.0).cast<double>() * n.grad.array();
    accumulate(pa, g);
  });
}

Tensor tanh_op(const Tensor& a) {
  Mat y = a.value().array().tanh();
  auto pa = a.node();
  return make_op(y, {a}, [pa, y](Node& n) {
    Mat g = (1.0 - y.array().square()) * n.grad.array();
    accumulate(pa, g);
  });
}

Tensor sigmoid(const Tensor& a) {
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp()));
  auto pa = a.node();
  return make_op(y, {a}, [pa, y](Node& n) {
    Mat g = y.array() * (1.0 - y.array()) * n.grad.array();
    accumulate(pa, g);
  });
}

Tensor exp_op(const Tensor& a) {
  Mat y = a.value().array().exp();
  auto pa = a.node();
  return make_op(y, {a}, [pa, y](Node& n) { accumulate(pa, Mat(n.grad.cwiseProduct(y))); });
}

Tensor log_op(const Tensor& a) {
  auto pa = a.node();
  return make_op(a.value().array().log(), {a}, [pa](Node& n) {
    Mat g = n.grad.array() / pa->value.array();
    accumulate(pa, g);
  });
}

Tensor square(const Tensor& a) {
  auto pa = a.node();
  return make_op(a.value().array().square(), {a}, [pa](Node& n) {
    accumulate(pa, Mat(2.0 * n.grad.cwiseProduct(pa->value)));
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  auto pa = a.node();
  return make_op(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [pa, lo, hi](Node& n) {
    Mat mask = ((pa->value.array() >= lo) && (pa->value.array() <= hi)).cast<double>();
    accumulate(pa, Mat(n.grad.cwiseProduct(mask)));
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), Err::ShapeMismatch, "matmul: inner dims differ");
  auto pa = a.node(), pb = b.node();
  return make_op(a.value() * b.value(), {a, b}, [pa, pb](Node& n) {
    if (pa->requires_grad) accumulate(pa, Mat(n.grad * pb->value.transpose()));
    if (pb->requires_grad) accumulate(pb, Mat(pa->value.transpose() * n.grad));
  });
}

Tensor transpose(const Tensor& a) {
  auto pa = a.node();
  return make_op(a.value().transpose(), {a},
                 [pa](Node& n) { accumulate(pa, Mat(n.grad.transpose())); });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), Err::ShapeMismatch, "concat_cols: empty");
  long rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, Err::ShapeMismatch, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Mat v(rows, cols);
  long off = 0;
  std::vector<long> offs;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    offs.push_back(off);
    off += p.cols();
  }
  std::vector<detail::NodePtr> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op(std::move(v), parts, [nodes, offs](Node& n) {
    for (size_t i = 0; i < nodes.size(); ++i)
      accumulate(nodes[i], Mat(n.grad.middleCols(offs[i], nodes[i]->value.cols())));
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), Err::ShapeMismatch, "concat_rows: empty");
  long cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, Err::ShapeMismatch, "concat_rows: col mismatch");
    rows += p.rows();
  }
  Mat v(rows, cols);
  long off = 0;
  std::vector<long> offs;
  for (const auto& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    offs.push_back(off);
    off += p.rows();
  }
  std::vector<detail::NodePtr> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return make_op(std::move(v), parts, [nodes, offs](Node& n) {
    for (size_t i = 0; i < nodes.size(); ++i)
      accumulate(nodes[i], Mat(n.grad.middleRows(offs[i], nodes[i]->value.rows())));
  });
}

Tensor slice_rows(const Tensor& a, long r0, long n) {
  require(r0 >= 0 && r0 + n <= a.rows(), Err::ShapeMismatch, "slice_rows: out of range");
  auto pa = a.node();
  return make_op(a.value().middleRows(r0, n), {a}, [pa, r0, n](Node& nd) {
    Mat& g = pa->grad_ref();
    g.middleRows(r0, n) += nd.grad;
  });
}

Tensor slice_cols(const Tensor& a, long c0, long n) {
  require(c0 >= 0 && c0 + n <= a.cols(), Err::ShapeMismatch, "slice_cols: out of range");
  auto pa = a.node();
  return make_op(a.value().middleCols(c0, n), {a}, [pa, c0, n](Node& nd) {
    Mat& g = pa->grad_ref();
    g.middleCols(c0, n) += nd.grad;
  });
}

Tensor broadcast_row(const Tensor& row, long t) {
  require(row.rows() == 1, Err::ShapeMismatch, "broadcast_row: expects 1xC");
  Mat v = row.value().replicate(t, 1);
  auto pa = row.node();
  return make_op(std::move(v), {row},
                 [pa](Node& n) { accumulate(pa, Mat(n.grad.colwise().sum())); });
}

Tensor reshape_rowmajor(const Tensor& a, long r, long c) {
  require(a.rows() * a.cols() == r * c, Err::ShapeMismatch, "reshape: size mismatch");
  const Mat& src = a.value();
  const long ac = a.cols();
  Mat v(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) {
      long lin = i * c + j;
      v(i, j) = src(lin / ac, lin % ac);
    }
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa, ac, c](Node& n) {
    Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
    for (long i = 0; i < n.grad.rows(); ++i)
      for (long j = 0; j < n.grad.cols(); ++j) {
        long lin = i * c + j;
        g(lin / ac, lin % ac) += n.grad(i, j);
      }
    accumulate(pa, g);
  });
}

Tensor repeat_rows_interleave(const Tensor& a, long times) {
  const long n = a.rows();
  Mat v(n * times, a.cols());
  for (long i = 0; i < n; ++i)
    for (long t = 0; t < times; ++t) v.row(i * times + t) = a.value().row(i);
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa, times, n](Node& nd) {
    Mat g = Mat::Zero(n, pa->value.cols());
    for (long i = 0; i < n; ++i)
      for (long t = 0; t < times; ++t) g.row(i) += nd.grad.row(i * times + t);
    accumulate(pa, g);
  });
}

Tensor tile_rows(const Tensor& a, long times) {
  Mat v = a.value().replicate(times, 1);
  auto pa = a.node();
  const long n = a.rows();
  return make_op(std::move(v), {a}, [pa, times, n](Node& nd) {
    Mat g = Mat::Zero(n, pa->value.cols());
    for (long t = 0; t < times; ++t) g += nd.grad.middleRows(t * n, n);
    accumulate(pa, g);
  });
}

Tensor diag_col(const Tensor& a) {
  require(a.rows() == a.cols(), Err::ShapeMismatch, "diag_col: square input required");
  Mat v = a.value().diagonal();
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa](Node& n) {
    Mat& g = pa->grad_ref();
    g.diagonal() += n.grad.col(0);
  });
}

Tensor sum_all(const Tensor& a) {
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa](Node& n) {
    accumulate(pa, Mat(Mat::Constant(pa->value.rows(), pa->value.cols(), n.grad(0, 0))));
  });
}

Tensor mean_all(const Tensor& a) {
  const double inv = 1.0 / static_cast<double>(a.rows() * a.cols());
  return scale(sum_all(a), inv);
}

Tensor mean_rows(const Tensor& a) {
  const long t = a.rows();
  Mat v = a.value().colwise().mean();
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa, t](Node& n) {
    accumulate(pa, Mat(n.grad.replicate(t, 1) / static_cast<double>(t)));
  });
}

Tensor row_softmax(const Tensor& a) {
  Mat y(a.rows(), a.cols());
  for (long i = 0; i < a.rows(); ++i) {
    Eigen::RowVectorXd r = a.value().row(i);
    double m = r.maxCoeff();
    Eigen::RowVectorXd e = (r.array() - m).exp();
    y.row(i) = e / e.sum();
  }
  auto pa = a.node();
  return make_op(y, {a}, [pa, y](Node& n) {
    Mat g(y.rows(), y.cols());
    for (long i = 0; i < y.rows(); ++i) {
      double dot = n.grad.row(i).dot(y.row(i));
      g.row(i) = y.row(i).array() * (n.grad.row(i).array() - dot);
    }
    accumulate(pa, g);
  });
}

Tensor logsumexp_rows(const Tensor& a) {
  Mat v(a.rows(), 1);
  for (long i = 0; i < a.rows(); ++i) {
    double m = a.value().row(i).maxCoeff();
    v(i, 0) = m + std::log((a.value().row(i).array() - m).exp().sum());
  }
  auto pa = a.node();
  const Mat lse = v;
  return make_op(std::move(v), {a}, [pa, lse](Node& n) {
    Mat g(pa->value.rows(), pa->value.cols());
    for (long i = 0; i < g.rows(); ++i)
      g.row(i) = (pa->value.row(i).array() - lse(i, 0)).exp() * n.grad(i, 0);
    accumulate(pa, g);
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.cols() == w.cols(), Err::ShapeMismatch, "affine: input width != weight fan-in");
  require(b.rows() == 1 && b.cols() == w.rows(), Err::ShapeMismatch, "affine: bias shape");
  Mat v = x.value() * w.value().transpose();
  v.rowwise() += b.value().row(0);
  auto px = x.node(), pw = w.node(), pb = b.node();
  return make_op(std::move(v), {x, w, b}, [px, pw, pb](Node& n) {
    if (px->requires_grad) accumulate(px, Mat(n.grad * pw->value));
    if (pw->requires_grad) accumulate(pw, Mat(n.grad.transpose() * px->value));
    if (pb->requires_grad) accumulate(pb, Mat(n.grad.colwise().sum()));
  });
}

// 1-D convolution along rows (time), zero-padded to keep T. Weight layout is
// (C_out, C_in * k) with the kernel index fastest.
Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b, int k) {
  require(k % 2 == 1, Err::ShapeMismatch, "conv1d: kernel must be odd");
  const long t = x.rows(), cin = x.cols();
  require(w.cols() == cin * k, Err::ShapeMismatch, "conv1d: weight fan-in mismatch");
  require(b.rows() == 1 && b.cols() == w.rows(), Err::ShapeMismatch, "conv1d: bias shape");
  const int pad = k / 2;
  Mat xcol = Mat::Zero(t, cin * k);
  for (long i = 0; i < t; ++i)
    for (int j = 0; j < k; ++j) {
      long src = i + j - pad;
      if (src < 0 || src >= t) continue;
      for (long c = 0; c < cin; ++c) xcol(i, c * k + j) = x.value()(src, c);
    }
  Mat v = xcol * w.value().transpose();
  v.rowwise() += b.value().row(0);
  auto px = x.node(), pw = w.node(), pb = b.node();
  return make_op(std::move(v), {x, w, b}, [px, pw, pb, xcol, k, pad](Node& n) {
    if (pw->requires_grad) accumulate(pw, Mat(n.grad.transpose() * xcol));
    if (pb->requires_grad) accumulate(pb, Mat(n.grad.colwise().sum()));
    if (px->requires_grad) {
      const long t = px->value.rows(), cin = px->value.cols();
      Mat dxcol = n.grad * pw->value;
      Mat dx = Mat::Zero(t, cin);
      for (long i = 0; i < t; ++i)
        for (int j = 0; j < k; ++j) {
          long src = i + j - pad;
          if (src < 0 || src >= t) continue;
          for (long c = 0; c < cin; ++c) dx(src, c) += dxcol(i, c * k + j);
        }
      accumulate(px, dx);
    }
  });
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  for (int id : ids)
    require(id >= 0 && id < table.rows(), Err::ShapeMismatch, "embedding: id out of range");
  Mat v(static_cast<long>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) v.row(static_cast<long>(i)) = table.value().row(ids[i]);
  auto pt = table.node();
  return make_op(std::move(v), {table}, [pt, ids](Node& n) {
    Mat& g = pt->grad_ref();
    for (size_t i = 0; i < ids.size(); ++i) g.row(ids[i]) += n.grad.row(static_cast<long>(i));
  });
}

Tensor repeat_rows_by(const Tensor& a, const std::vector<int>& durations) {
  require(static_cast<long>(durations.size()) == a.rows(), Err::ShapeMismatch,
          "repeat_rows_by: one duration per row required");
  long total = 0;
  for (int d : durations) {
    require(d > 0, Err::NonPositiveDuration, "duration must be positive");
    total += d;
  }
  Mat v(total, a.cols());
  long r = 0;
  for (long i = 0; i < a.rows(); ++i)
    for (int d = 0; d < durations[i]; ++d) v.row(r++) = a.value().row(i);
  auto pa = a.node();
  return make_op(std::move(v), {a}, [pa, durations](Node& n) {
    Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
    long r = 0;
    for (long i = 0; i < g.rows(); ++i)
      for (int d = 0; d < durations[i]; ++d) g.row(i) += n.grad.row(r++);
    accumulate(pa, g);
  });
}

Tensor l2_normalize_rows(const Tensor& a) {
  constexpr double kEps = 1e-12;
  Mat y(a.rows(), a.cols());
  Vec norms(a.rows());
  for (long i = 0; i < a.rows(); ++i) {
    norms(i) = std::sqrt(a.value().row(i).squaredNorm() + kEps);
    y.row(i) = a.value().row(i) / norms(i);
  }
  auto pa = a.node();
  return make_op(y, {a}, [pa, norms](Node& n) {
    Mat g(pa->value.rows(), pa->value.cols());
    for (long i = 0; i < g.rows(); ++i) {
      double nrm = norms(i);
      double dot = n.grad.row(i).dot(pa->value.row(i));
      g.row(i) = n.grad.row(i) / nrm - pa->value.row(i) * (dot / (nrm * nrm * nrm));
    }
    accumulate(pa, g);
  });
}

Tensor mean_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mean_abs_diff");
  const double inv = 1.0 / static_cast<double>(a.rows() * a.cols());
  Mat diff = a.value() - b.value();
  Mat v(1, 1);
  v(0, 0) = diff.array().abs().sum() * inv;
  auto pa = a.node(), pb = b.node();
  return make_op(std::move(v), {a, b}, [pa, pb, diff, inv](Node& n) {
    Mat s = diff.array().sign() * (n.grad(0, 0) * inv);
    if (pa->requires_grad) accumulate(pa, s);
    if (pb->requires_grad) accumulate(pb, Mat(-s));
  });
}

Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& targets) {
  require(static_cast<long>(targets.size()) == logits.rows(), Err::ShapeMismatch,
          "cross_entropy: one target per row");
  for (int t : targets)
    require(t >= 0 && t < logits.cols(), Err::ShapeMismatch, "cross_entropy: target out of range");
  const long n = logits.rows();
  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    double m = logits.value().row(i).maxCoeff();
    double lse = m + std::log((logits.value().row(i).array() - m).exp().sum());
    loss += lse - logits.value()(i, targets[i]);
  }
  Mat v(1, 1);
  v(0, 0) = loss / static_cast<double>(n);
  auto pl = logits.node();
  return make_op(std::move(v), {logits}, [pl, targets, n](Node& nd) {
    Mat g(n, pl->value.cols());
    for (long i = 0; i < n; ++i) {
      Eigen::RowVectorXd r = pl->value.row(i);
      double m = r.maxCoeff();
      Eigen::RowVectorXd e = (r.array() - m).exp();
      g.row(i) = e / e.sum();
      g(i, targets[i]) -= 1.0;
    }
    accumulate(pl, Mat(g * (nd.grad(0, 0) / static_cast<double>(n))));
  });
}

Tensor grl(const Tensor& x, double lambda) {
  auto px = x.node();
  return make_op(x.value(), {x},
                 [px, lambda](Node& n) { accumulate(px, Mat(n.grad * (-lambda))); });
}

Tensor detach(const Tensor& x) { return Tensor(x.value(), false); }

}  // namespace eadvc::nn

// SPDX-License-Identifier: Apache-2.0
#include "eadvc/miest.hpp"

#include <cmath>

#include "eadvc/nn/ops.hpp"

namespace eadvc::miest {

using namespace eadvc::nn;

namespace {
void check_samples(const Tensor& x, const Tensor& y) {
  require(x.rows() == y.rows(), Err::ShapeMismatch, "sample sets must be index-aligned");
  require(x.rows() >= 2, Err::BatchTooSmall, "need at least 2 joint samples");
}
}  // namespace

Critic Critic::create(ParamStore& store, const std::string& prefix, int dx, int dy, int hidden,
                      Rng& rng) {
  Critic c;
  c.dx = dx;
  c.dy = dy;
  c.fc1 = Linear::create(store, prefix + ".fc1", dx + dy, hidden, rng);
  c.fc2 = Linear::create(store, prefix + ".fc2", hidden, 1, rng);
  return c;
}

Tensor Critic::score_pairs(const Tensor& x, const Tensor& y) const {
  require(x.cols() == dx && y.cols() == dy, Err::ShapeMismatch, "critic input dims");
  const long n = x.rows();
  Tensor xr = repeat_rows_interleave(x, n);  // row i*n+j = x_i
  Tensor yt = tile_rows(y, n);               // row i*n+j = y_j
  Tensor scores = fc2(tanh_op(fc1(concat_cols({xr, yt}))));
  return reshape_rowmajor(scores, n, n);
}

Tensor critic_loss(const Critic& f, const Tensor& x, const Tensor& y) {
  check_samples(x, y);
  const long n = x.rows();
  Tensor pairs = f.score_pairs(x, y);
  Tensor joint = mean_all(diag_col(pairs));
  Tensor marg = mean_all(logsumexp_rows(pairs));
  return add_scalar(sub(joint, marg), std::log(static_cast<double>(n)));
}

Tensor ifub_loss(const Critic& f, const Tensor& x, const Tensor& y, bool literal) {
  check_samples(x, y);
  if (literal)
    require(f.dx == f.dy, Err::InvalidConfig,
            "ifub_literal needs equal pair dims (f(x_i, x_j) feeds x into the y slot)");
  Tensor pairs = f.score_pairs(x, literal ? x : y);
  Tensor marginal = mean_all(pairs);
  Tensor joint = literal ? mean_all(diag_col(f.score_pairs(x, y))) : mean_all(diag_col(pairs));
  return sub(joint, marginal);
}

MIEstimate ifub_estimate(const Critic& f, const Mat& x, const Mat& y, bool literal,
                         const std::string& pair_id) {
  Tensor tx = constant(x), ty = constant(y);
  MIEstimate e;
  e.value = ifub_loss(f, tx, ty, literal).item();
  e.pair_id = pair_id;
  e.n = x.rows();
  require(std::isfinite(e.value), Err::NanLoss, "ifub estimate not finite");
  return e;
}

GaussianQ GaussianQ::create(ParamStore& store, const std::string& prefix, int dx, int dy,
                            Rng& rng) {
  GaussianQ q;
  q.dx = dx;
  q.dy = dy;
  q.mu = Linear::create(store, prefix + ".mu", dx, dy, rng, 0.1);
  q.logvar = Linear::create(store, prefix + ".logvar", dx, dy, rng, 0.01);
  return q;
}

Tensor GaussianQ::nll(const Tensor& x, const Tensor& y) const {
  check_samples(x, y);
  Tensor m = mu(x), lv = logvar(x);
  Tensor diff = sub(y, m);
  Tensor term = add(mul(square(diff), exp_op(scale(lv, -1.0))), lv);
  return scale(mean_all(term), 0.5 * static_cast<double>(dy));
}

namespace {
// log q(y_j | x_i) for all pairs, constants included (they cancel in the
// estimate but keep each entry a true log-density).
Mat log_q_pairs(const GaussianQ& q, const Mat& x, const Mat& y) {
  const long n = x.rows();
  Mat mu = x * q.mu.w.value().transpose();
  mu.rowwise() += q.mu.b.value().row(0);
  Mat lv = x * q.logvar.w.value().transpose();
  lv.rowwise() += q.logvar.b.value().row(0);
  Mat out(n, n);
  const double c = std::log(2.0 * M_PI);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double acc = 0.0;
      for (long d = 0; d < y.cols(); ++d) {
        const double diff = y(j, d) - mu(i, d);
        acc += diff * diff * std::exp(-lv(i, d)) + lv(i, d) + c;
      }
      out(i, j) = -0.5 * acc;
    }
  return out;
}
}  // namespace

MIEstimate vclub_estimate(const GaussianQ& q, const Mat& x, const Mat& y,
                          const std::string& pair_id) {
  require(x.rows() == y.rows() && x.rows() >= 2, Err::BatchTooSmall, "vclub needs >= 2 samples");
  Mat lq = log_q_pairs(q, x, y);
  MIEstimate e;
  e.value = lq.diagonal().mean() - lq.mean();
  e.pair_id = pair_id;
  e.n = x.rows();
  require(std::isfinite(e.value), Err::NanLoss, "vclub estimate not finite");
  return e;
}

double gaussian_mi_oracle(double rho) {
  require(std::abs(rho) < 1.0, Err::InvalidCorrelation, "|rho| must be < 1");
  return -0.5 * std::log(1.0 - rho * rho);
}

MiCritics MiCritics::create(int dc, int dp, int dr, int hidden, double lr, bool literal,
                            Rng& rng) {
  MiCritics m;
  m.lr = lr;
  m.literal = literal;
  m.cp = Critic::create(m.store, "critic_cp", dc, dp, hidden, rng);
  m.pr = Critic::create(m.store, "critic_pr", dp, dr, hidden, rng);
  m.cr = Critic::create(m.store, "critic_cr", dc, dr, hidden, rng);
  return m;
}

std::array<double, 3> MiCritics::update(const Mat& zc, const Mat& zp, const Mat& zr) {
  std::array<double, 3> out{};
  const Critic* critics[3] = {&cp, &pr, &cr};
  const Mat* xs[3] = {&zc, &zp, &zc};
  const Mat* ys[3] = {&zp, &zr, &zr};
  store.zero_grad();
  Tensor neg = Tensor::scalar(0.0);
  for (int k = 0; k < 3; ++k) {
    Tensor l = critic_loss(*critics[k], constant(*xs[k]), constant(*ys[k]));
    out[static_cast<size_t>(k)] = l.item();
    neg = add(neg, scale(l, -1.0));  // ascend L by descending -L
  }
  neg.backward();
  opt.step(store, lr);
  return out;
}

Tensor MiCritics::mi_loss(const Tensor& zc, const Tensor& zp, const Tensor& zr) const {
  Tensor total = ifub_loss(cp, zc, zp, literal);
  total = add(total, ifub_loss(pr, zp, zr, literal));
  return add(total, ifub_loss(cr, zc, zr, literal));
}

std::array<double, 3> MiCritics::estimates(const Mat& zc, const Mat& zp, const Mat& zr) const {
  return {ifub_estimate(cp, zc, zp, literal, "c,p").value,
          ifub_estimate(pr, zp, zr, literal, "p,r").value,
          ifub_estimate(cr, zc, zr, literal, "c,r").value};
}

GaussianBenchRow run_gaussian_bench(double rho, long eval_samples, long critic_steps, long seed,
                                    int critic_hidden, double critic_lr) {
  GaussianBenchRow row;
  row.rho = rho;
  row.analytic = gaussian_mi_oracle(rho);

  Rng rng(static_cast<std::uint64_t>(seed));
  auto draw = [&](Rng& r, long n) {
    Mat x(n, 1), y(n, 1);
    for (long i = 0; i < n; ++i) {
      const double a = r.gaussian(), b = r.gaussian();
      x(i, 0) = a;
      y(i, 0) = rho * a + std::sqrt(1.0 - rho * rho) * b;
    }
    return std::pair<Mat, Mat>(x, y);
  };

  Rng init = rng.fork(1);
  ParamStore store;
  Critic critic = Critic::create(store, "critic", 1, 1, critic_hidden, init);
  GaussianQ q = GaussianQ::create(store, "q", 1, 1, init);
  Adam opt;

  constexpr long kBatch = 128;
  Rng data = rng.fork(2);
  for (long step = 0; step < critic_steps; ++step) {
    auto [x, y] = draw(data, kBatch);
    store.zero_grad();
    Tensor obj = add(scale(critic_loss(critic, constant(x), constant(y)), -1.0),
                     q.nll(constant(x), constant(y)));
    obj.backward();
    opt.step(store, critic_lr);
  }

  // a couple of independent evaluation draws to tame sampling noise
  Rng eval = rng.fork(3);
  double acc_ifub = 0.0, acc_vclub = 0.0;
  constexpr int kEvalReps = 4;
  for (int rep = 0; rep < kEvalReps; ++rep) {
    auto [x, y] = draw(eval, eval_samples);
    acc_ifub += ifub_estimate(critic, x, y).value;
    acc_vclub += vclub_estimate(q, x, y).value;
  }
  row.ifub = acc_ifub / kEvalReps;
  row.vclub = acc_vclub / kEvalReps;
  return row;
}

}  // namespace eadvc::miest

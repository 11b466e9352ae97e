// Independent reference implementations for the unit tests. Everything here
// is written with plain loops over std::vector so it shares no code path with
// the Eigen expressions under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "localprop/algos.hpp"
#include "localprop/init.hpp"
#include "localprop/network.hpp"

namespace oracle {

using localprop::Activation;
using localprop::Matrix;
using localprop::NetworkParams;
using Rows = std::vector<std::vector<double>>;

inline Rows rows_of(const Matrix& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

inline double act(Activation a, double v) { return a == Activation::Tanh ? std::tanh(v) : v; }

// One sample through the network. pre[l], post[l] per layer.
struct Sample {
  std::vector<std::vector<double>> pre, post;
};

inline Sample forward_sample(const NetworkParams& p, const std::vector<double>& x) {
  Sample s;
  std::vector<double> below = x;
  for (int l = 0; l < p.depth(); ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> h(layer.output_dim());
    for (int j = 0; j < layer.output_dim(); ++j) {
      double acc = layer.bias(j);
      for (int k = 0; k < layer.input_dim(); ++k) acc += layer.weights(j, k) * below[k];
      h[j] = acc;
    }
    std::vector<double> z(h.size());
    if (layer.activation == Activation::Softmax) {
      double peak = h[0];
      for (double v : h) peak = std::max(peak, v);
      double total = 0.0;
      for (std::size_t j = 0; j < h.size(); ++j) total += std::exp(h[j] - peak);
      for (std::size_t j = 0; j < h.size(); ++j) z[j] = std::max(std::exp(h[j] - peak) / total, 1e-8);
    } else {
      for (std::size_t j = 0; j < h.size(); ++j) z[j] = act(layer.activation, h[j]);
    }
    s.pre.push_back(h);
    s.post.push_back(z);
    below = z;
  }
  return s;
}

inline std::vector<Sample> forward_rows(const NetworkParams& p, const Matrix& x) {
  std::vector<Sample> out;
  for (const auto& row : rows_of(x)) out.push_back(forward_sample(p, row));
  return out;
}

// Per-layer gradient accumulators.
struct Grads {
  std::vector<Rows> dw;
  std::vector<std::vector<double>> dc;
  std::vector<Rows> de;
};

inline Grads zero_grads(const NetworkParams& p) {
  Grads g;
  for (int l = 0; l < p.depth(); ++l) {
    g.dw.emplace_back(p.layers[l].output_dim(), std::vector<double>(p.layers[l].input_dim(), 0.0));
    g.dc.emplace_back(p.layers[l].output_dim(), 0.0);
    g.de.emplace_back(p.feedback[l].rows(), std::vector<double>(p.feedback[l].cols(), 0.0));
  }
  return g;
}

// dW += delta below^T / B, dc += delta / B for one sample.
inline void accumulate(Grads& g, int l, const std::vector<double>& delta, const std::vector<double>& below,
                       double inv_batch) {
  for (std::size_t j = 0; j < delta.size(); ++j) {
    g.dc[l][j] += delta[j] * inv_batch;
    for (std::size_t k = 0; k < below.size(); ++k) g.dw[l][j][k] += delta[j] * below[k] * inv_batch;
  }
}

struct LraResult {
  std::vector<Rows> targets;  // [layer][sample][unit]
  std::vector<Rows> errors;
  Grads grads;
};

// LRA-E with Gaussian hidden loss (variance `var`). The top signal is -y/z
// (floored at 1e-8) or, with raw_top off, the softmax delta z - y.
inline LraResult lra(const NetworkParams& p, const Matrix& x, const Matrix& y, double beta, double gamma,
                     double var, bool v1, double feedback_sign = -1.0, bool raw_top = true) {
  const int L = p.depth();
  const auto xs = rows_of(x);
  const auto ys = rows_of(y);
  const auto fw = forward_rows(p, x);
  const double inv = 1.0 / static_cast<double>(xs.size());
  LraResult r;
  r.targets.assign(L, Rows(xs.size()));
  r.errors.assign(L, Rows(xs.size()));
  r.grads = zero_grads(p);
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const Sample& s = fw[n];
    std::vector<double> e(s.post[L - 1].size());
    for (std::size_t j = 0; j < e.size(); ++j) {
      e[j] = raw_top ? -ys[n][j] / std::max(s.post[L - 1][j], 1e-8) : s.post[L - 1][j] - ys[n][j];
    }
    r.targets[L - 1][n] = ys[n];
    r.errors[L - 1][n] = e;
    for (int i = L - 1; i >= 1; --i) {
      const Matrix& E = p.feedback[i];  // [below x here]
      std::vector<double> target(E.rows()), below_err(E.rows());
      for (Eigen::Index k = 0; k < E.rows(); ++k) {
        double disp = 0.0;
        for (Eigen::Index j = 0; j < E.cols(); ++j) disp += E(k, j) * r.errors[i][n][j];
        target[k] = act(p.layers[i - 1].activation, s.pre[i - 1][k] - beta * disp);
        below_err[k] = -(target[k] - s.post[i - 1][k]) / var;
      }
      r.targets[i - 1][n] = target;
      r.errors[i - 1][n] = below_err;
    }
    for (int i = 0; i < L; ++i) {
      std::vector<double> delta = r.errors[i][n];
      if (i == L - 1) {
        // softmax + categorical, for one-hot rows
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = s.post[i][j] - ys[n][j];
      }
      if (i < L - 1 && v1) {
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= 1.0 - s.post[i][j] * s.post[i][j];
      }
      accumulate(r.grads, i, delta, i == 0 ? xs[n] : s.post[i - 1], inv);
    }
  }
  for (int i = 1; i < L; ++i) {
    for (std::size_t a = 0; a < r.grads.de[i].size(); ++a)
      for (std::size_t b = 0; b < r.grads.de[i][a].size(); ++b)
        r.grads.de[i][a][b] = feedback_sign * gamma * r.grads.dw[i][b][a];
  }
  return r;
}

// Direct feedback alignment: delta_i = (D_i e_out) * (1 - z_i^2).
inline Grads dfa(const NetworkParams& p, const Matrix& x, const Matrix& y) {
  const int L = p.depth();
  const auto xs = rows_of(x);
  const auto ys = rows_of(y);
  const auto fw = forward_rows(p, x);
  const double inv = 1.0 / static_cast<double>(xs.size());
  Grads g = zero_grads(p);
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const Sample& s = fw[n];
    std::vector<double> e(s.post[L - 1].size());
    for (std::size_t j = 0; j < e.size(); ++j) e[j] = s.post[L - 1][j] - ys[n][j];
    accumulate(g, L - 1, e, L == 1 ? xs[n] : s.post[L - 2], inv);
    for (int i = L - 2; i >= 0; --i) {
      const Matrix& D = p.feedback[i];  // [units x outputs]
      std::vector<double> delta(D.rows());
      for (Eigen::Index k = 0; k < D.rows(); ++k) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < D.cols(); ++j) acc += D(k, j) * e[j];
        delta[k] = acc * (1.0 - s.post[i][k] * s.post[i][k]);
      }
      accumulate(g, i, delta, i == 0 ? xs[n] : s.post[i - 1], inv);
    }
  }
  return g;
}

// Max |a - b| between an Eigen matrix and an oracle table.
inline double max_abs_diff(const Matrix& m, const Rows& r) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - r[i][j]));
  return worst;
}

inline double max_abs_diff(const localprop::Vector& v, const std::vector<double>& r) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v(i) - r[i]));
  return worst;
}

// Central differences of f with respect to every entry of `m`.
inline Matrix finite_difference(Matrix& m, const std::function<double()>& f, double step = 1e-5) {
  Matrix g(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double keep = m(i, j);
      m(i, j) = keep + step;
      const double up = f();
      m(i, j) = keep - step;
      const double down = f();
      m(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

// Largest entrywise relative error, with `floor` guarding near-zero entries.
inline double max_rel_error(const Matrix& a, const Matrix& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor}));
  return worst;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  return m;
}

inline Matrix one_hot_rows(int rows, int classes, std::mt19937_64& rng) {
  Matrix y = Matrix::Zero(rows, classes);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  for (int r = 0; r < rows; ++r) y(r, pick(rng)) = 1.0;
  return y;
}

// Network with the given widths (tanh hidden, softmax top), fan-in-fan-out
// weights and random nonzero biases so bias gradients are exercised.
inline NetworkParams make_net(const std::vector<int>& widths, localprop::FeedbackLayout layout, std::uint64_t seed) {
  std::vector<localprop::LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    specs.push_back({widths[i], widths[i + 1], i + 2 == widths.size() ? Activation::Softmax : Activation::Tanh});
  }
  NetworkParams p = localprop::init_params(specs, localprop::InitScheme::fan_in_fan_out(), seed, layout);
  std::mt19937_64 rng(seed + 99);
  for (auto& l : p.layers) l.bias = random_matrix(static_cast<int>(l.bias.size()), 1, rng, -0.3, 0.3).col(0);
  return p;
}

}  // namespace oracle

#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "optit/kernels/kernels.hpp"
#include "optit/util/require.hpp"
#include "optit/util/rng.hpp"

namespace optit::nn {

struct LinearSpec {
  int in = 0, out = 0;
  std::size_t w = 0, b = 0;  // offsets into the flat parameter vector
};

// Dense feed-forward trunk (ELU between hidden layers) with any number of
// linear output heads on the last hidden activation. Parameters live in one
// flat vector: hidden layers first, then heads, each as (W row-major, b).
// Instantiated for float (runtime path) and double (gradient-check path).
template <typename T>
class Net {
 public:
  Net() = default;
  Net(int input_dim, std::vector<int> hidden, std::vector<int> head_dims)
      : input_dim_(input_dim), hidden_(std::move(hidden)) {
    require(input_dim_ > 0, "Net: input_dim must be positive");
    require(!hidden_.empty(), "Net: at least one hidden layer required");
    for (int h : hidden_) require(h > 0, "Net: hidden widths must be positive");
    require(!head_dims.empty(), "Net: at least one head required");
    std::size_t off = 0;
    int prev = input_dim_;
    for (int width : hidden_) {
      LinearSpec l{prev, width, off, off + static_cast<std::size_t>(prev) * width};
      off = l.b + width;
      layers_.push_back(l);
      prev = width;
    }
    for (int dim : head_dims) {
      require(dim > 0, "Net: head dims must be positive");
      LinearSpec l{prev, dim, off, off + static_cast<std::size_t>(prev) * dim};
      off = l.b + dim;
      heads_.push_back(l);
    }
    n_params_ = off;
    params_.assign(n_params_, T(0));
  }

  int input_dim() const { return input_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  int num_heads() const { return static_cast<int>(heads_.size()); }
  int head_dim(int h) const { return heads_[h].out; }
  std::size_t param_count() const { return n_params_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  const LinearSpec& hidden_layer(int i) const { return layers_[i]; }
  const LinearSpec& head_layer(int h) const { return heads_[h]; }

  // Fan-in-scaled uniform init for hidden layers; heads stay zero so initial
  // policies are uniform and initial values zero.
  void init_params(Rng& rng) {
    std::fill(params_.begin(), params_.end(), T(0));
    for (const LinearSpec& l : layers_) {
      double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
        params_[l.w + i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * scale);
      }
    }
  }

  struct Trace {
    int batch = 0;
    std::vector<std::vector<T>> act;   // per hidden layer: batch x width (post-ELU)
    std::vector<std::vector<T>> head;  // per head: batch x dim (raw logits)

    std::span<const T> act_row(int layer, int row) const {
      return {act[layer].data() + static_cast<std::size_t>(row) * width(layer),
              static_cast<std::size_t>(width(layer))};
    }
    std::span<const T> head_row(int h, int row) const {
      std::size_t dim = head[h].size() / batch;
      return {head[h].data() + row * dim, dim};
    }

   private:
    int width(int layer) const { return static_cast<int>(act[layer].size() / batch); }
  };

  // x: batch rows of input_dim. Computes the trunk and the requested heads.
  void forward(const T* x, int batch, std::span<const int> head_ids, Trace& tr) const {
    const auto& k = kern::ops<T>();
    tr.batch = batch;
    tr.act.resize(layers_.size());
    tr.head.assign(heads_.size(), {});
    const T* cur = x;
    int cur_dim = input_dim_;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const LinearSpec& l = layers_[li];
      auto& act = tr.act[li];
      act.resize(static_cast<std::size_t>(batch) * l.out);
      for (int r = 0; r < batch; ++r) {
        T* row = act.data() + static_cast<std::size_t>(r) * l.out;
        k.matvec_bias(params_.data() + l.w, params_.data() + l.b,
                      cur + static_cast<std::size_t>(r) * cur_dim, row, l.out, l.in);
        k.elu(row, row, l.out);
      }
      cur = act.data();
      cur_dim = l.out;
    }
    for (int h : head_ids) {
      const LinearSpec& l = heads_[h];
      auto& out = tr.head[h];
      out.resize(static_cast<std::size_t>(batch) * l.out);
      for (int r = 0; r < batch; ++r) {
        k.matvec_bias(params_.data() + l.w, params_.data() + l.b,
                      cur + static_cast<std::size_t>(r) * cur_dim,
                      out.data() + static_cast<std::size_t>(r) * l.out, l.out, l.in);
      }
    }
  }

  // dhead[h]: batch x head_dim upstream gradients for each id in head_ids.
  // Accumulates parameter gradients into grad (length param_count()).
  void backward(const T* x, int batch, const Trace& tr, std::span<const int> head_ids,
                const std::vector<std::vector<T>>& dhead, T* grad) const {
    const auto& k = kern::ops<T>();
    int last = static_cast<int>(layers_.size()) - 1;
    int last_width = layers_[last].out;
    std::vector<T> d_cur(static_cast<std::size_t>(batch) * last_width, T(0));
    const T* trunk_act = tr.act[last].data();

    for (int h : head_ids) {
      const LinearSpec& l = heads_[h];
      const auto& dh = dhead[h];
      require(dh.size() == static_cast<std::size_t>(batch) * l.out,
              "Net::backward: dhead size mismatch");
      for (int r = 0; r < batch; ++r) {
        const T* dy = dh.data() + static_cast<std::size_t>(r) * l.out;
        const T* a = trunk_act + static_cast<std::size_t>(r) * l.in;
        k.ger_acc(grad + l.w, dy, a, l.out, l.in);
        k.axpy(T(1), dy, grad + l.b, l.out);
        k.matvec_t_acc(params_.data() + l.w, dy,
                       d_cur.data() + static_cast<std::size_t>(r) * l.in, l.out, l.in);
      }
    }

    std::vector<T> dpre, d_prev;
    for (int li = last; li >= 0; --li) {
      const LinearSpec& l = layers_[li];
      dpre.resize(d_cur.size());
      k.elu_bwd_from_act(tr.act[li].data(), d_cur.data(), dpre.data(),
                         static_cast<int>(d_cur.size()));
      const T* prev_act = li > 0 ? tr.act[li - 1].data() : x;
      if (li > 0) d_prev.assign(static_cast<std::size_t>(batch) * l.in, T(0));
      for (int r = 0; r < batch; ++r) {
        const T* dp = dpre.data() + static_cast<std::size_t>(r) * l.out;
        const T* a = prev_act + static_cast<std::size_t>(r) * l.in;
        k.ger_acc(grad + l.w, dp, a, l.out, l.in);
        k.axpy(T(1), dp, grad + l.b, l.out);
        if (li > 0) {
          k.matvec_t_acc(params_.data() + l.w, dp,
                         d_prev.data() + static_cast<std::size_t>(r) * l.in, l.out, l.in);
        }
      }
      d_cur.swap(d_prev);
    }
  }

 private:
  int input_dim_ = 0;
  std::vector<int> hidden_;
  std::vector<LinearSpec> layers_, heads_;
  std::size_t n_params_ = 0;
  std::vector<T> params_;
};

}  // namespace optit::nn

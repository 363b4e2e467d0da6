#pragma once

#include <string>
#include <vector>

#include "slicesim/ad.hpp"
#include "slicesim/config.hpp"
#include "slicesim/rng.hpp"

namespace slicesim::nn {

using ad::Mat;
using ad::Param;
using ad::Tape;
using ad::Var;

Mat glorot_uniform(int rows, int cols, Rng& rng);

struct Dense {
  Param W;  // in x out
  Param b;  // 1 x out

  Dense() = default;
  Dense(const std::string& name, int in, int out, Rng& rng, double bias_init = 0.0);

  Var apply(Tape& t, Var x);  // (n x in) -> (n x out)
  void collect(std::vector<Param*>& out);
  int in_dim() const { return static_cast<int>(W.value.rows()); }
  int out_dim() const { return static_cast<int>(W.value.cols()); }
};

// Multi-head graph attention over a fixed adjacency mask (1 = edge). Each
// head computes attention scores leaky_relu(a_src . Wh_i + a_dst . Wh_j),
// normalizes over the neighborhood, aggregates, then heads are concatenated
// and passed through tanh.
struct GatLayer {
  int heads = 1;
  int head_dim = 0;
  std::vector<Param> W;         // per head: in x head_dim
  std::vector<Param> attn_src;  // per head: head_dim x 1
  std::vector<Param> attn_dst;  // per head: head_dim x 1

  GatLayer() = default;
  GatLayer(const std::string& name, int in, int head_dim, int heads, Rng& rng);

  Var apply(Tape& t, Var h, const Mat& adjacency);  // (n x in) -> (n x heads*head_dim)
  void collect(std::vector<Param*>& out);
  int out_dim() const { return heads * head_dim; }
};

// Bidirectional LSTM over a fixed-length sequence of (batch x input) frames.
// Returns the concatenation of the two directions' final hidden states,
// (batch x 2*hidden). Gate layout is [i f g o].
struct BiLstm {
  int input_dim = 0;
  int hidden = 0;
  Param Wx_f, Wh_f, b_f;
  Param Wx_b, Wh_b, b_b;

  BiLstm() = default;
  BiLstm(const std::string& name, int input_dim, int hidden, Rng& rng);

  Var apply(Tape& t, const std::vector<Mat>& seq);
  void collect(std::vector<Param*>& out);
  int out_dim() const { return 2 * hidden; }
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);
  double lr() const { return lr_; }
  long t() const { return t_; }
  void set_t(long t) { t_ = t; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
};

json params_to_json(const std::vector<Param*>& params, bool with_moments = true);
// Shapes and names must match the receiving parameters exactly.
void params_from_json(const json& j, const std::vector<Param*>& params);

}  // namespace slicesim::nn

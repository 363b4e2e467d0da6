#include "slicesim/nn.hpp"

#include <cmath>

namespace slicesim::nn {

Mat glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  }
  return m;
}

Dense::Dense(const std::string& name, int in, int out, Rng& rng, double bias_init)
    : W(name + ".W", glorot_uniform(in, out, rng)),
      b(name + ".b", Mat::Constant(1, out, bias_init)) {}

Var Dense::apply(Tape& t, Var x) {
  if (x.cols() != in_dim()) {
    throw InputError("Dense " + W.name + ": input has " + std::to_string(x.cols()) +
                     " features, expected " + std::to_string(in_dim()));
  }
  return ad::add_rowvec(ad::matmul(x, t.param(W)), t.param(b));
}

void Dense::collect(std::vector<Param*>& out) {
  out.push_back(&W);
  out.push_back(&b);
}

GatLayer::GatLayer(const std::string& name, int in, int head_dim_, int heads_, Rng& rng)
    : heads(heads_), head_dim(head_dim_) {
  for (int h = 0; h < heads; ++h) {
    const std::string base = name + ".h" + std::to_string(h);
    W.emplace_back(base + ".W", glorot_uniform(in, head_dim, rng));
    attn_src.emplace_back(base + ".a_src", glorot_uniform(head_dim, 1, rng));
    attn_dst.emplace_back(base + ".a_dst", glorot_uniform(head_dim, 1, rng));
  }
}

Var GatLayer::apply(Tape& t, Var h, const Mat& adjacency) {
  if (adjacency.rows() != h.rows() || adjacency.cols() != h.rows()) {
    throw InputError("GatLayer: adjacency must be square over the node set");
  }
  Var out;
  for (int k = 0; k < heads; ++k) {
    Var wh = ad::matmul(h, t.param(W[k]));                      // n x d
    Var score_src = ad::matmul(wh, t.param(attn_src[k]));       // n x 1
    Var score_dst = ad::matmul(wh, t.param(attn_dst[k]));       // n x 1
    Var scores = ad::leaky_relu(ad::outer_sum(score_src, score_dst), 0.2);
    Var alpha = ad::row_softmax_masked(scores, adjacency);
    Var agg = ad::matmul(alpha, wh);
    out = k == 0 ? agg : ad::hcat(out, agg);
  }
  return ad::tanh_(out);
}

void GatLayer::collect(std::vector<Param*>& out) {
  for (int k = 0; k < heads; ++k) {
    out.push_back(&W[k]);
    out.push_back(&attn_src[k]);
    out.push_back(&attn_dst[k]);
  }
}

BiLstm::BiLstm(const std::string& name, int input_dim_, int hidden_, Rng& rng)
    : input_dim(input_dim_),
      hidden(hidden_),
      Wx_f(name + ".fwd.Wx", glorot_uniform(input_dim_, 4 * hidden_, rng)),
      Wh_f(name + ".fwd.Wh", glorot_uniform(hidden_, 4 * hidden_, rng)),
      b_f(name + ".fwd.b", Mat::Zero(1, 4 * hidden_)),
      Wx_b(name + ".bwd.Wx", glorot_uniform(input_dim_, 4 * hidden_, rng)),
      Wh_b(name + ".bwd.Wh", glorot_uniform(hidden_, 4 * hidden_, rng)),
      b_b(name + ".bwd.b", Mat::Zero(1, 4 * hidden_)) {}

namespace {

Var lstm_direction(Tape& t, const std::vector<Mat>& seq, bool reverse, int hidden,
                   Param& Wx, Param& Wh, Param& b) {
  const int batch = static_cast<int>(seq.front().rows());
  Var wx = t.param(Wx), wh = t.param(Wh), bias = t.param(b);
  Var h = t.constant(Mat::Zero(batch, hidden));
  Var c = t.constant(Mat::Zero(batch, hidden));
  const int T = static_cast<int>(seq.size());
  for (int step = 0; step < T; ++step) {
    const Mat& frame = seq[reverse ? T - 1 - step : step];
    Var x = t.constant(frame);
    Var gates = ad::add_rowvec(ad::add(ad::matmul(x, wx), ad::matmul(h, wh)), bias);
    Var i = ad::sigmoid(ad::block_cols(gates, 0, hidden));
    Var f = ad::sigmoid(ad::block_cols(gates, hidden, hidden));
    Var g = ad::tanh_(ad::block_cols(gates, 2 * hidden, hidden));
    Var o = ad::sigmoid(ad::block_cols(gates, 3 * hidden, hidden));
    c = ad::add(ad::cmul(f, c), ad::cmul(i, g));
    h = ad::cmul(o, ad::tanh_(c));
  }
  return h;
}

}  // namespace

Var BiLstm::apply(Tape& t, const std::vector<Mat>& seq) {
  if (seq.empty()) throw InputError("BiLstm: empty sequence");
  for (const auto& frame : seq) {
    if (frame.cols() != input_dim) {
      throw InputError("BiLstm: history frame has " + std::to_string(frame.cols()) +
                       " features, expected " + std::to_string(input_dim));
    }
  }
  Var fwd = lstm_direction(t, seq, false, hidden, Wx_f, Wh_f, b_f);
  Var bwd = lstm_direction(t, seq, true, hidden, Wx_b, Wh_b, b_b);
  return ad::hcat(fwd, bwd);
}

void BiLstm::collect(std::vector<Param*>& out) {
  for (Param* p : {&Wx_f, &Wh_f, &b_f, &Wx_b, &Wh_b, &b_b}) out.push_back(p);
}

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (Param* p : params) {
    p->m = b1_ * p->m + (1.0 - b1_) * p->grad;
    p->v = b2_ * p->v + (1.0 - b2_) * p->grad.cwiseProduct(p->grad);
    const Mat m_hat = p->m / bc1;
    const Mat v_hat = p->v / bc2;
    p->value -= lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
  }
}

namespace {

json mat_to_json(const Mat& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat mat_from_json(const json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols) {
    throw InputError("parameter blob has wrong element count");
  }
  Mat m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace

json params_to_json(const std::vector<Param*>& params, bool with_moments) {
  json j = json::array();
  for (const Param* p : params) {
    json pj{{"name", p->name}, {"value", mat_to_json(p->value)}};
    if (with_moments) {
      pj["m"] = mat_to_json(p->m);
      pj["v"] = mat_to_json(p->v);
    }
    j.push_back(std::move(pj));
  }
  return j;
}

void params_from_json(const json& j, const std::vector<Param*>& params) {
  if (j.size() != params.size()) {
    throw InputError("checkpoint holds " + std::to_string(j.size()) + " parameters, model has " +
                     std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const json& pj = j.at(i);
    if (pj.at("name").get<std::string>() != params[i]->name) {
      throw InputError("checkpoint parameter order mismatch at '" + params[i]->name + "'");
    }
    Mat value = mat_from_json(pj.at("value"));
    if (value.rows() != params[i]->value.rows() || value.cols() != params[i]->value.cols()) {
      throw InputError("checkpoint dimension mismatch for '" + params[i]->name + "': stored " +
                       std::to_string(value.rows()) + "x" + std::to_string(value.cols()) +
                       ", model expects " + std::to_string(params[i]->value.rows()) + "x" +
                       std::to_string(params[i]->value.cols()));
    }
    params[i]->value = std::move(value);
    if (pj.contains("m")) params[i]->m = mat_from_json(pj.at("m"));
    if (pj.contains("v")) params[i]->v = mat_from_json(pj.at("v"));
  }
}

}  // namespace slicesim::nn

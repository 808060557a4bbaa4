#include "docparse/tiny_decoder.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "docparse/errors.hpp"
#include "docparse/rng.hpp"

namespace docparse::toy {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::RowVectorXd;
using MatMap = Eigen::Map<Mat>;
using CMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Vec>;
using CVecMap = Eigen::Map<const Vec>;

constexpr double kLnEps = 1e-5;
constexpr double kGeluK = 1.702;  // GELU(u) ~ u * sigmoid(1.702 u)

struct Block {
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

struct LayerNormCache {
  Mat xhat;
  Eigen::VectorXd rstd;
};

LayerNormCache layer_norm(const Mat& x, const CVecMap& gain, const CVecMap& bias, Mat& y) {
  LayerNormCache c;
  const auto d = static_cast<double>(x.cols());
  c.xhat.resize(x.rows(), x.cols());
  c.rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / d;
    const double var = (x.row(r).array() - mean).square().sum() / d;
    c.rstd(r) = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(r) = (x.row(r).array() - mean) * c.rstd(r);
  }
  y = (c.xhat.array().rowwise() * gain.array()).rowwise() + bias.array();
  return c;
}

Mat layer_norm_backward(const LayerNormCache& c, const Mat& dy, const CVecMap& gain, VecMap dgain, VecMap dbias) {
  dgain += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * gain.array();
  const auto d = static_cast<double>(dy.cols());
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double m1 = dxhat.row(r).sum() / d;
    const double m2 = dxhat.row(r).dot(c.xhat.row(r)) / d;
    dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2);
  }
  return dx;
}

}  // namespace

struct TinyDecoder::Layout {
  struct LayerBlocks {
    Block ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_1, b_1, w_2, b_2;
  };
  Block w_patch, w_col, b_patch, pos_prefix, tok_emb, pos_tok;
  std::vector<LayerBlocks> layers;
  Block lnf_g, lnf_b, w_out, b_out;
  std::size_t total = 0;

  Block add(int rows, int cols) {
    Block b{total, rows, cols};
    total += b.size();
    return b;
  }
};

struct ForwardState {
  struct LayerCache {
    Mat x_in, h1, qkv, att, x_mid, h2, pre, gate, act;
    LayerNormCache ln1, ln2;
    std::vector<Mat> probs;  // per head, T x T
  };
  Mat patches;  // Patches: one flattened patch per row. Lines: rows then columns.
  std::vector<int> tokens;
  std::vector<LayerCache> layers;
  Mat final_in, final_out;
  LayerNormCache lnf;
};

void ForwardStateDeleter::operator()(ForwardState* state) const noexcept { delete state; }

void TinyDecoderConfig::validate() const {
  if (embed_dim < 1 || num_layers < 0 || num_heads < 1) throw ConfigError("decoder dimensions must be positive");
  if (embed_dim % num_heads != 0) {
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (vocab_size < 1) throw ConfigError("decoder vocab_size must be positive");
  if (max_seq_len < 1) throw ConfigError("decoder max_seq_len must be positive");
  if (grid_height < 1 || grid_width < 1) throw ConfigError("decoder grid must be at least 1x1");
  if (prefix == PrefixKind::Patches &&
      (patch_size < 1 || grid_height % patch_size != 0 || grid_width % patch_size != 0)) {
    throw ConfigError("patch_size " + std::to_string(patch_size) + " must divide the " +
                      std::to_string(grid_height) + "x" + std::to_string(grid_width) + " grid");
  }
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
}

TinyDecoder::TinyDecoder(const TinyDecoderConfig& config) : config_(config), layout_(std::make_unique<Layout>()) {
  config_.validate();
  const int d = config_.embed_dim;
  const int p2 = config_.patch_size * config_.patch_size;
  const int hidden = d * config_.mlp_ratio;
  auto& L = *layout_;
  if (config_.prefix == PrefixKind::Lines) {
    L.w_patch = L.add(config_.grid_width, d);
    L.w_col = L.add(config_.grid_height, d);
  } else {
    L.w_patch = L.add(p2, d);
  }
  L.b_patch = L.add(1, d);
  L.pos_prefix = L.add(config_.num_prefix(), d);
  L.tok_emb = L.add(config_.vocab_size, d);
  L.pos_tok = L.add(config_.max_seq_len, d);
  for (int l = 0; l < config_.num_layers; ++l) {
    Layout::LayerBlocks b;
    b.ln1_g = L.add(1, d);
    b.ln1_b = L.add(1, d);
    b.w_qkv = L.add(d, 3 * d);
    b.b_qkv = L.add(1, 3 * d);
    b.w_o = L.add(d, d);
    b.b_o = L.add(1, d);
    b.ln2_g = L.add(1, d);
    b.ln2_b = L.add(1, d);
    b.w_1 = L.add(d, hidden);
    b.b_1 = L.add(1, hidden);
    b.w_2 = L.add(hidden, d);
    b.b_2 = L.add(1, d);
    L.layers.push_back(b);
  }
  L.lnf_g = L.add(1, d);
  L.lnf_b = L.add(1, d);
  L.w_out = L.add(d, config_.vocab_size);
  L.b_out = L.add(1, config_.vocab_size);

  params_.assign(L.total, 0.0);
  Rng rng(config_.seed);
  auto fill_normal = [&](const Block& b, double scale) {
    for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = rng.normal(0.0, scale);
  };
  auto fill_const = [&](const Block& b, double v) {
    for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = v;
  };
  const double s = config_.init_scale;
  // Residual projections are scaled down with depth, as in GPT-2.
  const double s_res = s / std::sqrt(2.0 * std::max(1, config_.num_layers));
  fill_normal(L.w_patch, s);
  fill_normal(L.w_col, s);
  fill_normal(L.pos_prefix, s);
  fill_normal(L.tok_emb, s);
  fill_normal(L.pos_tok, s);
  for (const auto& b : L.layers) {
    fill_const(b.ln1_g, 1.0);
    fill_normal(b.w_qkv, s);
    fill_normal(b.w_o, s_res);
    fill_const(b.ln2_g, 1.0);
    fill_normal(b.w_1, s);
    fill_normal(b.w_2, s_res);
  }
  fill_const(L.lnf_g, 1.0);
  fill_normal(L.w_out, s);
}

TinyDecoder::~TinyDecoder() = default;
TinyDecoder::TinyDecoder(TinyDecoder&&) noexcept = default;
TinyDecoder& TinyDecoder::operator=(TinyDecoder&&) noexcept = default;

std::vector<double> TinyDecoder::logits(std::span<const std::uint8_t> grid, std::span<const int> tokens) const {
  std::vector<double> out;
  forward(grid, tokens, out);
  return out;
}

ForwardStatePtr TinyDecoder::forward(std::span<const std::uint8_t> grid, std::span<const int> tokens,
                                     std::vector<double>& logits_out) const {
  const auto& c = config_;
  const auto& L = *layout_;
  if (grid.size() != static_cast<std::size_t>(c.grid_height * c.grid_width)) {
    throw DomainError("grid has " + std::to_string(grid.size()) + " cells, decoder expects " +
                      std::to_string(c.grid_height * c.grid_width));
  }
  if (tokens.size() > static_cast<std::size_t>(c.max_seq_len)) {
    throw DomainError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds max_seq_len " +
                      std::to_string(c.max_seq_len));
  }
  for (int t : tokens) {
    if (t < 0 || t >= c.vocab_size) throw DomainError("token " + std::to_string(t) + " outside the vocabulary");
  }

  const double* P = params_.data();
  auto mat = [&](const Block& b) { return CMatMap(P + b.offset, b.rows, b.cols); };
  auto vec = [&](const Block& b) { return CVecMap(P + b.offset, b.cols); };

  ForwardStatePtr st(new ForwardState);
  const int d = c.embed_dim;
  const int np = c.num_prefix();
  const int nt = static_cast<int>(tokens.size());
  const int T = np + nt;

  st->tokens.assign(tokens.begin(), tokens.end());
  Mat x(T, d);
  if (c.prefix == PrefixKind::Lines) {
    const int H = c.grid_height, W = c.grid_width;
    st->patches.resize(H, W);
    for (int r = 0; r < H; ++r) {
      for (int col = 0; col < W; ++col) st->patches(r, col) = grid[static_cast<std::size_t>(r * W + col)];
    }
    x.topRows(H) = st->patches * mat(L.w_patch);
    x.middleRows(H, W) = st->patches.transpose() * mat(L.w_col);
    x.topRows(np).rowwise() += vec(L.b_patch);
  } else {
    const int ps = c.patch_size;
    const int pw = c.grid_width / ps;
    st->patches.resize(np, ps * ps);
    for (int p = 0; p < np; ++p) {
      const int pr = p / pw, pc = p % pw;
      for (int dy = 0; dy < ps; ++dy) {
        for (int dx = 0; dx < ps; ++dx) {
          st->patches(p, dy * ps + dx) =
              grid[static_cast<std::size_t>((pr * ps + dy) * c.grid_width + pc * ps + dx)];
        }
      }
    }
    x.topRows(np) = (st->patches * mat(L.w_patch)).rowwise() + vec(L.b_patch);
  }
  x.topRows(np) += mat(L.pos_prefix);
  const auto emb = mat(L.tok_emb);
  const auto pos = mat(L.pos_tok);
  for (int j = 0; j < nt; ++j) x.row(np + j) = emb.row(tokens[j]) + pos.row(j);

  const int heads = c.num_heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  st->layers.resize(static_cast<std::size_t>(c.num_layers));
  for (int l = 0; l < c.num_layers; ++l) {
    const auto& B = L.layers[static_cast<std::size_t>(l)];
    auto& lc = st->layers[static_cast<std::size_t>(l)];
    lc.x_in = x;
    lc.ln1 = layer_norm(x, vec(B.ln1_g), vec(B.ln1_b), lc.h1);
    lc.qkv = (lc.h1 * mat(B.w_qkv)).rowwise() + vec(B.b_qkv);
    lc.att.resize(T, d);
    lc.probs.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      const auto q = lc.qkv.middleCols(h * dh, dh);
      const auto k = lc.qkv.middleCols(d + h * dh, dh);
      const auto v = lc.qkv.middleCols(2 * d + h * dh, dh);
      Mat s = (q * k.transpose()) * scale;
      for (int i = np; i < T; ++i) {
        for (int j = i + 1; j < T; ++j) s(i, j) = -std::numeric_limits<double>::infinity();
      }
      for (int i = 0; i < np; ++i) {
        for (int j = np; j < T; ++j) s(i, j) = -std::numeric_limits<double>::infinity();
      }
      for (int i = 0; i < T; ++i) {
        const double m = s.row(i).maxCoeff();
        s.row(i) = (s.row(i).array() - m).exp();
        s.row(i) /= s.row(i).sum();
      }
      lc.att.middleCols(h * dh, dh) = s * v;
      lc.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    lc.x_mid = x + ((lc.att * mat(B.w_o)).rowwise() + vec(B.b_o));
    lc.ln2 = layer_norm(lc.x_mid, vec(B.ln2_g), vec(B.ln2_b), lc.h2);
    lc.pre = (lc.h2 * mat(B.w_1)).rowwise() + vec(B.b_1);
    lc.gate = ((-kGeluK * lc.pre.array()).exp() + 1.0).inverse().matrix();
    lc.act = (lc.pre.array() * lc.gate.array()).matrix();
    x = lc.x_mid + ((lc.act * mat(B.w_2)).rowwise() + vec(B.b_2));
  }
  st->final_in = x;
  st->lnf = layer_norm(x, vec(L.lnf_g), vec(L.lnf_b), st->final_out);

  const int V = c.vocab_size;
  logits_out.resize(static_cast<std::size_t>(nt) * V);
  MatMap out(logits_out.data(), nt, V);
  out = (st->final_out.bottomRows(nt) * mat(L.w_out)).rowwise() + vec(L.b_out);
  return st;
}

void TinyDecoder::backward(const ForwardState& st, std::span<const double> dlogits, std::span<double> grad) const {
  const auto& c = config_;
  const auto& L = *layout_;
  const int d = c.embed_dim;
  const int np = c.num_prefix();
  const int nt = static_cast<int>(st.tokens.size());
  const int T = np + nt;
  const int V = c.vocab_size;
  if (dlogits.size() != static_cast<std::size_t>(nt) * V) throw DomainError("dlogits shape does not match forward");
  if (grad.size() != params_.size()) throw DomainError("gradient buffer does not match parameter count");

  const double* P = params_.data();
  double* G = grad.data();
  auto mat = [&](const Block& b) { return CMatMap(P + b.offset, b.rows, b.cols); };
  auto vec = [&](const Block& b) { return CVecMap(P + b.offset, b.cols); };
  auto gmat = [&](const Block& b) { return MatMap(G + b.offset, b.rows, b.cols); };
  auto gvec = [&](const Block& b) { return VecMap(G + b.offset, b.cols); };

  const CMatMap dout(dlogits.data(), nt, V);
  gmat(L.w_out) += st.final_out.bottomRows(nt).transpose() * dout;
  gvec(L.b_out) += dout.colwise().sum();
  Mat dfinal = Mat::Zero(T, d);
  dfinal.bottomRows(nt) = dout * mat(L.w_out).transpose();
  Mat dx = layer_norm_backward(st.lnf, dfinal, vec(L.lnf_g), gvec(L.lnf_g), gvec(L.lnf_b));

  const int heads = c.num_heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int l = c.num_layers - 1; l >= 0; --l) {
    const auto& B = L.layers[static_cast<std::size_t>(l)];
    const auto& lc = st.layers[static_cast<std::size_t>(l)];

    // MLP sublayer.
    gmat(B.w_2) += lc.act.transpose() * dx;
    gvec(B.b_2) += dx.colwise().sum();
    Mat dpre = dx * mat(B.w_2).transpose();
    dpre.array() *=
        lc.gate.array() + kGeluK * lc.pre.array() * lc.gate.array() * (1.0 - lc.gate.array());
    gmat(B.w_1) += lc.h2.transpose() * dpre;
    gvec(B.b_1) += dpre.colwise().sum();
    const Mat dh2 = dpre * mat(B.w_1).transpose();
    Mat dmid = dx + layer_norm_backward(lc.ln2, dh2, vec(B.ln2_g), gvec(B.ln2_g), gvec(B.ln2_b));

    // Attention sublayer.
    gmat(B.w_o) += lc.att.transpose() * dmid;
    gvec(B.b_o) += dmid.colwise().sum();
    const Mat datt = dmid * mat(B.w_o).transpose();
    Mat dqkv(T, 3 * d);
    for (int h = 0; h < heads; ++h) {
      const auto& A = lc.probs[static_cast<std::size_t>(h)];
      const auto q = lc.qkv.middleCols(h * dh, dh);
      const auto k = lc.qkv.middleCols(d + h * dh, dh);
      const auto v = lc.qkv.middleCols(2 * d + h * dh, dh);
      const auto dO = datt.middleCols(h * dh, dh);
      const Mat dA = dO * v.transpose();
      dqkv.middleCols(2 * d + h * dh, dh) = A.transpose() * dO;
      const Eigen::VectorXd rowdot = (dA.array() * A.array()).rowwise().sum();
      const Mat dS = (A.array() * (dA.array().colwise() - rowdot.array())) * scale;
      dqkv.middleCols(h * dh, dh) = dS * k;
      dqkv.middleCols(d + h * dh, dh) = dS.transpose() * q;
    }
    gmat(B.w_qkv) += lc.h1.transpose() * dqkv;
    gvec(B.b_qkv) += dqkv.colwise().sum();
    const Mat dh1 = dqkv * mat(B.w_qkv).transpose();
    dx = dmid + layer_norm_backward(lc.ln1, dh1, vec(B.ln1_g), gvec(B.ln1_g), gvec(B.ln1_b));
  }

  gmat(L.pos_prefix) += dx.topRows(np);
  if (c.prefix == PrefixKind::Lines) {
    const int H = c.grid_height, W = c.grid_width;
    gmat(L.w_patch) += st.patches.transpose() * dx.topRows(H);
    gmat(L.w_col) += st.patches * dx.middleRows(H, W);
  } else {
    gmat(L.w_patch) += st.patches.transpose() * dx.topRows(np);
  }
  gvec(L.b_patch) += dx.topRows(np).colwise().sum();
  auto demb = gmat(L.tok_emb);
  auto dpos = gmat(L.pos_tok);
  for (int j = 0; j < nt; ++j) {
    demb.row(st.tokens[static_cast<std::size_t>(j)]) += dx.row(np + j);
    dpos.row(j) += dx.row(np + j);
  }
}

}  // namespace docparse::toy

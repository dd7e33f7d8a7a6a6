#include "retype/model/retyper.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "retype/error.hpp"
#include "retype/hash.hpp"

namespace retype::model {

// ---------------------------------------------------------------------------
// Config

void ModelConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::kValidation, "model config: " + what); };
  if (d_model == 0 || heads == 0 || layers == 0 || ff == 0 || max_len == 0) {
    bad("all dimensions must be positive");
  }
  if (d_model % heads != 0) bad("d_model must be divisible by heads");
  if (!(mask_penalty >= 0.0) || !std::isfinite(mask_penalty)) bad("mask penalty must be >= 0");
}

Json ModelConfig::to_json() const {
  return Json{{"d_model", d_model},   {"heads", heads},
              {"layers", layers},     {"ff", ff},
              {"vocab_size", vocab_size}, {"lexicon_size", lexicon_size},
              {"max_len", max_len},   {"mask_penalty", mask_penalty},
              {"use_layout", use_layout}, {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const Json& j) {
  ModelConfig c;
  c.d_model = require_uint(j, "d_model");
  c.heads = require_uint(j, "heads");
  c.layers = require_uint(j, "layers");
  c.ff = require_uint(j, "ff");
  c.vocab_size = require_uint(j, "vocab_size");
  c.lexicon_size = require_uint(j, "lexicon_size");
  c.max_len = require_uint(j, "max_len");
  const Json& mp = require(j, "mask_penalty");
  if (!mp.is_number()) throw Error(ErrorKind::kValidation, "field 'mask_penalty' must be a number");
  c.mask_penalty = mp.get<double>();
  const Json& ul = require(j, "use_layout");
  if (!ul.is_boolean()) throw Error(ErrorKind::kValidation, "field 'use_layout' must be a boolean");
  c.use_layout = ul.get<bool>();
  c.seed = require_uint(j, "seed");
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Features

std::size_t size_bucket(std::uint64_t size) {
  std::size_t b = 0;
  for (std::uint64_t bound = 1; b + 1 < kSizeBuckets && size > bound; bound <<= 1) ++b;
  return b;
}

std::size_t offset_bucket(const StorageLocation& loc) {
  if (loc.kind != StorageKind::kStack) return 0;
  const std::uint64_t mag = loc.value < 0 ? 0 - static_cast<std::uint64_t>(loc.value)
                                          : static_cast<std::uint64_t>(loc.value);
  return std::min<std::size_t>(1 + std::bit_width(mag), kOffsetBuckets - 1);
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask, double penalty) {
  std::vector<double> p(logits);
  if (penalty != 0.0) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask[i]) p[i] -= penalty;
    }
  }
  softmax_inplace(p.data(), p.size());
  return p;
}

// ---------------------------------------------------------------------------
// Parameters

std::size_t Parameters::add(std::string name, std::size_t rows, std::size_t cols) {
  tensors.push_back({std::move(name), Mat(rows, cols)});
  return tensors.size() - 1;
}

Parameters::Parameters(const ModelConfig& c) {
  const auto d = c.d_model;
  tok_emb = add("tok_emb", c.vocab_size, d);
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerIndex li{};
    li.wq = add(p + "wq", d, d);
    li.bq = add(p + "bq", 1, d);
    li.wk = add(p + "wk", d, d);
    li.bk = add(p + "bk", 1, d);
    li.wv = add(p + "wv", d, d);
    li.bv = add(p + "bv", 1, d);
    li.wo = add(p + "wo", d, d);
    li.bo = add(p + "bo", 1, d);
    li.ln1_g = add(p + "ln1_g", 1, d);
    li.ln1_b = add(p + "ln1_b", 1, d);
    li.w1 = add(p + "w1", d, c.ff);
    li.b1 = add(p + "b1", 1, c.ff);
    li.w2 = add(p + "w2", c.ff, d);
    li.b2 = add(p + "b2", 1, d);
    li.ln2_g = add(p + "ln2_g", 1, d);
    li.ln2_b = add(p + "ln2_b", 1, d);
    layers.push_back(li);
  }
  kind_emb = add("layout.kind", kStorageKinds, d);
  size_emb = add("layout.size", kSizeBuckets, d);
  off_emb = add("layout.offset", kOffsetBuckets, d);
  wl = add("layout.w", d, d);
  bl = add("layout.b", 1, d);
  wh = add("head.w", d, d);
  bh = add("head.b", 1, d);
  wc = add("classifier.w", d, c.lexicon_size);
  bc = add("classifier.b", 1, c.lexicon_size);
}

void Parameters::init_random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&](Mat& m, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& x : m.v) x = dist(rng);
  };
  for (auto& t : tensors) {
    const auto& n = t.name;
    const bool is_bias = t.m.rows == 1 && n.find("emb") == std::string::npos;
    if (n.ends_with("_g")) {
      std::fill(t.m.v.begin(), t.m.v.end(), 1.0);
    } else if (is_bias) {
      t.m.zero();
    } else if (n == "tok_emb" || (n.starts_with("layout.") && n != "layout.w")) {
      fill(t.m, 0.5);
    } else {
      fill(t.m, std::sqrt(6.0 / static_cast<double>(t.m.rows + t.m.cols)));
    }
  }
}

void Parameters::zero() {
  for (auto& t : tensors) t.m.zero();
}

std::size_t Parameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.m.size();
  return n;
}

double Parameters::global_norm() const {
  double s = 0.0;
  for (const auto& t : tensors) {
    for (double x : t.m.v) s += x * x;
  }
  return std::sqrt(s);
}

bool Parameters::all_finite() const {
  for (const auto& t : tensors) {
    for (double x : t.m.v) {
      if (!std::isfinite(x)) return false;
    }
  }
  return true;
}

std::uint64_t Parameters::checksum() const {
  Fnv1a64 h;
  for (const auto& t : tensors) {
    h.update(t.name);
    for (double x : t.m.v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      for (int i = 0; i < 8; ++i) h.update_byte(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }
  return h.digest();
}

Json Parameters::norms() const {
  Json j = Json::object();
  for (const auto& t : tensors) {
    double s = 0.0;
    for (double x : t.m.v) s += x * x;
    j[t.name] = std::sqrt(s);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Model

namespace {

Mat sinusoid(std::size_t len, std::size_t d) {
  Mat p(len, d);
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < d; i += 2) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
      p(pos, i) = std::sin(angle);
      if (i + 1 < d) p(pos, i + 1) = std::cos(angle);
    }
  }
  return p;
}

void expect(bool cond, const char* what) {
  if (!cond) throw Error(ErrorKind::kInternal, std::string("forward invariant violated: ") + what);
}

struct LayerCache {
  Mat x, q, k, v, o, r1, y, xhat1, f1, g, r2, out, xhat2;
  std::vector<double> inv1, inv2;
  std::vector<Mat> attn;  // per head, n x n
};

Mat encoder_forward(const Parameters& P, const ModelConfig& cfg, const Mat& positions,
                    const std::vector<std::size_t>& ids, bool check,
                    std::vector<LayerCache>& caches) {
  const std::size_t n = std::min(ids.size(), cfg.max_len);
  const std::size_t d = cfg.d_model;
  const std::size_t H = cfg.heads;
  const std::size_t dk = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Mat x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = ids[i] < cfg.vocab_size ? ids[i] : TokenVocab::kUnknownId;
    const double* e = P[P.tok_emb].row(id);
    const double* pe = positions.row(i);
    double* xi = x.row(i);
    for (std::size_t j = 0; j < d; ++j) xi[j] = e[j] + pe[j];
  }
  caches.assign(P.layers.size(), LayerCache{});
  for (std::size_t l = 0; l < P.layers.size(); ++l) {
    const auto& L = P.layers[l];
    auto& c = caches[l];
    c.x = x;
    matmul(x, P[L.wq], c.q, &P[L.bq]);
    matmul(x, P[L.wk], c.k, &P[L.bk]);
    matmul(x, P[L.wv], c.v, &P[L.bv]);
    c.o.resize(n, d);
    c.attn.assign(H, Mat(n, n));
    for (std::size_t h = 0; h < H; ++h) {
      Mat& a = c.attn[h];
      for (std::size_t i = 0; i < n; ++i) {
        double* ai = a.row(i);
        const double* qi = c.q.row(i) + h * dk;
        for (std::size_t j = 0; j < n; ++j) {
          const double* kj = c.k.row(j) + h * dk;
          double acc = 0.0;
          for (std::size_t t = 0; t < dk; ++t) acc += qi[t] * kj[t];
          ai[j] = acc * scale;
        }
        softmax_inplace(ai, n);
        if (check) {
          double sum = 0.0;
          for (std::size_t j = 0; j < n; ++j) sum += ai[j];
          expect(std::abs(sum - 1.0) <= 1e-6, "attention row does not sum to 1");
        }
        double* oi = c.o.row(i) + h * dk;
        for (std::size_t j = 0; j < n; ++j) {
          const double w = ai[j];
          const double* vj = c.v.row(j) + h * dk;
          for (std::size_t t = 0; t < dk; ++t) oi[t] += w * vj[t];
        }
      }
    }
    Mat att;
    matmul(c.o, P[L.wo], att, &P[L.bo]);
    c.r1 = x;
    for (std::size_t i = 0; i < c.r1.size(); ++i) c.r1.v[i] += att.v[i];
    layer_norm(c.r1, P[L.ln1_g], P[L.ln1_b], c.y, c.xhat1, c.inv1);
    matmul(c.y, P[L.w1], c.f1, &P[L.b1]);
    c.g = c.f1;
    for (auto& e : c.g.v) e = gelu(e);
    Mat f2;
    matmul(c.g, P[L.w2], f2, &P[L.b2]);
    c.r2 = c.y;
    for (std::size_t i = 0; i < c.r2.size(); ++i) c.r2.v[i] += f2.v[i];
    layer_norm(c.r2, P[L.ln2_g], P[L.ln2_b], c.out, c.xhat2, c.inv2);
    x = c.out;
  }
  if (check) {
    expect(x.rows == n && x.cols == d, "encoder output shape");
    for (const auto& c : caches) expect(c.attn.size() == H, "head count");
  }
  return x;
}

}  // namespace

Retyper::Retyper(ModelConfig config, TypeLexicon lexicon, TokenVocab vocab)
    : config_(std::move(config)), lexicon_(std::move(lexicon)), vocab_(std::move(vocab)) {
  config_.vocab_size = vocab_.size();
  config_.lexicon_size = lexicon_.size();
  config_.validate();
  params_ = Parameters(config_);
  params_.init_random(config_.seed);
  for (const auto& e : lexicon_.entries()) type_sizes_.push_back(size_of(e.type));
  positions_ = sinusoid(config_.max_len, config_.d_model);
}

Retyper::Retyper(ModelConfig config, TypeLexicon lexicon, TokenVocab vocab, Parameters params)
    : config_(std::move(config)), lexicon_(std::move(lexicon)), vocab_(std::move(vocab)) {
  config_.validate();
  if (config_.vocab_size != vocab_.size() || config_.lexicon_size != lexicon_.size()) {
    throw Error(ErrorKind::kValidation, "model config disagrees with vocabulary or lexicon size");
  }
  Parameters shape(config_);
  if (shape.tensors.size() != params.tensors.size()) {
    throw Error(ErrorKind::kValidation, "parameter count does not match the model config");
  }
  for (std::size_t i = 0; i < shape.tensors.size(); ++i) {
    const auto& a = shape.tensors[i];
    const auto& b = params.tensors[i];
    if (a.name != b.name || a.m.rows != b.m.rows || a.m.cols != b.m.cols) {
      throw Error(ErrorKind::kValidation, "parameter '" + b.name + "' has the wrong shape");
    }
  }
  params_ = std::move(params);
  for (const auto& e : lexicon_.entries()) type_sizes_.push_back(size_of(e.type));
  positions_ = sinusoid(config_.max_len, config_.d_model);
}

EncodedExample Retyper::encode(const LabeledExample& ex) const {
  EncodedExample out;
  out.ids = vocab_.encode(ex.input.tokens);
  if (out.ids.size() > config_.max_len) {
    spdlog::warn("{}: {} tokens truncated to {}", ex.input.function_id(), out.ids.size(),
                 config_.max_len);
    out.ids.resize(config_.max_len);
  }
  out.vars.resize(ex.input.variables.size());
  for (std::size_t p = 0; p < out.ids.size(); ++p) {
    if (const auto& v = ex.input.tokens.tokens[p].variable) out.vars[*v].positions.push_back(p);
  }
  for (std::size_t i = 0; i < out.vars.size(); ++i) {
    const auto& rec = ex.input.variables[i];
    auto& ev = out.vars[i];
    ev.kind = static_cast<std::size_t>(rec.storage.kind);
    ev.size_bucket = size_bucket(rec.size());
    ev.offset_bucket = offset_bucket(rec.storage);
    ev.mask.resize(type_sizes_.size());
    for (std::size_t t = 0; t < type_sizes_.size(); ++t) {
      ev.mask[t] = type_sizes_[t] != 0 && type_sizes_[t] != rec.size();
    }
    if (i < ex.gold.size()) {
      const auto& gold = ex.gold[i].type;
      if (auto r = lexicon_.rank_of(render_type(gold))) {
        ev.gold = *r;
        ev.gold_known = true;
      } else {
        ev.gold = lexicon_.unknown_rank();
      }
    }
  }
  return out;
}

Mat Retyper::encode_code(const std::vector<std::size_t>& ids) const {
  std::vector<LayerCache> caches;
  return encoder_forward(params_, config_, positions_, ids, check_, caches);
}

double Retyper::run(const EncodedExample& ex, Parameters* grad,
                    std::vector<std::vector<double>>* probs) const {
  const auto& P = params_;
  const std::size_t n = std::min(ex.ids.size(), config_.max_len);
  const std::size_t d = config_.d_model;
  const std::size_t H = config_.heads;
  const std::size_t dk = d / H;
  const std::size_t T = config_.lexicon_size;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<LayerCache> caches;
  const Mat enc = encoder_forward(P, config_, positions_, ex.ids, check_, caches);

  // ---- variable representations and head ------------------------------------
  const std::size_t m = ex.vars.size();
  if (probs) probs->clear();
  if (m == 0) return 0.0;
  Mat r(m, d);
  Mat lay_in(m, d);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& v = ex.vars[j];
    double* rj = r.row(j);
    std::size_t used = 0;
    for (auto p : v.positions) {
      if (p >= n) continue;
      const double* hp = enc.row(p);
      for (std::size_t t = 0; t < d; ++t) rj[t] += hp[t];
      ++used;
    }
    if (used > 0) {
      for (std::size_t t = 0; t < d; ++t) rj[t] /= static_cast<double>(used);
    }
    if (config_.use_layout) {
      double* li = lay_in.row(j);
      const double* ek = P[P.kind_emb].row(v.kind);
      const double* es = P[P.size_emb].row(v.size_bucket);
      const double* eo = P[P.off_emb].row(v.offset_bucket);
      for (std::size_t t = 0; t < d; ++t) li[t] = ek[t] + es[t] + eo[t];
    }
  }
  if (config_.use_layout) {
    Mat lay;
    matmul(lay_in, P[P.wl], lay, &P[P.bl]);
    for (std::size_t i = 0; i < r.size(); ++i) r.v[i] += lay.v[i];
  }
  Mat z;
  matmul(r, P[P.wh], z, &P[P.bh]);
  Mat u = z;
  for (auto& e : u.v) e = gelu(e);
  Mat logits;
  matmul(u, P[P.wc], logits, &P[P.bc]);

  double loss = 0.0;
  Mat dlogits(m, T);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& v = ex.vars[j];
    std::vector<double> row(logits.row(j), logits.row(j) + T);
    auto p = masked_softmax(row, v.mask, config_.mask_penalty);
    if (check_) {
      double sum = 0.0;
      for (double x2 : p) sum += x2;
      expect(p.size() == T, "distribution width");
      expect(std::abs(sum - 1.0) <= 1e-6, "distribution does not sum to 1");
    }
    loss -= std::log(std::max(p[v.gold], 1e-300));
    double* dl = dlogits.row(j);
    for (std::size_t t = 0; t < T; ++t) dl[t] = p[t];
    dl[v.gold] -= 1.0;
    if (probs) probs->push_back(std::move(p));
  }
  if (!grad) return loss;

  // ---- backward: head ---------------------------------------------------------
  Parameters& G = *grad;
  matmul_at_acc(u, dlogits, G[P.wc]);
  colsum_acc(dlogits, G[P.bc]);
  Mat du(m, d);
  matmul_bt_acc(dlogits, P[P.wc], du);
  for (std::size_t i = 0; i < du.size(); ++i) du.v[i] *= gelu_grad(z.v[i]);
  matmul_at_acc(r, du, G[P.wh]);
  colsum_acc(du, G[P.bh]);
  Mat dr(m, d);
  matmul_bt_acc(du, P[P.wh], dr);
  if (config_.use_layout) {
    matmul_at_acc(lay_in, dr, G[P.wl]);
    colsum_acc(dr, G[P.bl]);
    Mat dlay(m, d);
    matmul_bt_acc(dr, P[P.wl], dlay);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& v = ex.vars[j];
      const double* g = dlay.row(j);
      double* gk = G[P.kind_emb].row(v.kind);
      double* gs = G[P.size_emb].row(v.size_bucket);
      double* go = G[P.off_emb].row(v.offset_bucket);
      for (std::size_t t = 0; t < d; ++t) {
        gk[t] += g[t];
        gs[t] += g[t];
        go[t] += g[t];
      }
    }
  }
  Mat dx(n, d);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& v = ex.vars[j];
    std::size_t used = 0;
    for (auto p : v.positions) used += p < n;
    if (used == 0) continue;
    const double w = 1.0 / static_cast<double>(used);
    const double* g = dr.row(j);
    for (auto p : v.positions) {
      if (p >= n) continue;
      double* o = dx.row(p);
      for (std::size_t t = 0; t < d; ++t) o[t] += w * g[t];
    }
  }

  // ---- backward: encoder ------------------------------------------------------
  for (std::size_t l = P.layers.size(); l-- > 0;) {
    const auto& L = P.layers[l];
    const auto& c = caches[l];
    Mat dr2;
    layer_norm_backward(dx, c.xhat2, c.inv2, P[L.ln2_g], dr2, G[L.ln2_g], G[L.ln2_b]);
    Mat dy = dr2;
    matmul_at_acc(c.g, dr2, G[L.w2]);
    colsum_acc(dr2, G[L.b2]);
    Mat dg(n, config_.ff);
    matmul_bt_acc(dr2, P[L.w2], dg);
    for (std::size_t i = 0; i < dg.size(); ++i) dg.v[i] *= gelu_grad(c.f1.v[i]);
    matmul_at_acc(c.y, dg, G[L.w1]);
    colsum_acc(dg, G[L.b1]);
    matmul_bt_acc(dg, P[L.w1], dy);
    Mat dr1;
    layer_norm_backward(dy, c.xhat1, c.inv1, P[L.ln1_g], dr1, G[L.ln1_g], G[L.ln1_b]);
    Mat dxin = dr1;
    matmul_at_acc(c.o, dr1, G[L.wo]);
    colsum_acc(dr1, G[L.bo]);
    Mat dO(n, d);
    matmul_bt_acc(dr1, P[L.wo], dO);
    Mat dq(n, d), dk_(n, d), dv(n, d);
    std::vector<double> da(n);
    for (std::size_t h = 0; h < H; ++h) {
      const Mat& a = c.attn[h];
      for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.row(i);
        const double* doi = dO.row(i) + h * dk;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double* vj = c.v.row(j) + h * dk;
          double acc = 0.0;
          for (std::size_t t = 0; t < dk; ++t) acc += doi[t] * vj[t];
          da[j] = acc;
          dot += acc * ai[j];
          double* dvj = dv.row(j) + h * dk;
          for (std::size_t t = 0; t < dk; ++t) dvj[t] += ai[j] * doi[t];
        }
        const double* qi = c.q.row(i) + h * dk;
        double* dqi = dq.row(i) + h * dk;
        for (std::size_t j = 0; j < n; ++j) {
          const double ds = ai[j] * (da[j] - dot) * scale;
          if (ds == 0.0) continue;
          const double* kj = c.k.row(j) + h * dk;
          double* dkj = dk_.row(j) + h * dk;
          for (std::size_t t = 0; t < dk; ++t) {
            dqi[t] += ds * kj[t];
            dkj[t] += ds * qi[t];
          }
        }
      }
    }
    matmul_at_acc(c.x, dq, G[L.wq]);
    colsum_acc(dq, G[L.bq]);
    matmul_bt_acc(dq, P[L.wq], dxin);
    matmul_at_acc(c.x, dk_, G[L.wk]);
    colsum_acc(dk_, G[L.bk]);
    matmul_bt_acc(dk_, P[L.wk], dxin);
    matmul_at_acc(c.x, dv, G[L.wv]);
    colsum_acc(dv, G[L.bv]);
    matmul_bt_acc(dv, P[L.wv], dxin);
    dx = std::move(dxin);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = ex.ids[i] < config_.vocab_size ? ex.ids[i] : TokenVocab::kUnknownId;
    double* g = G[P.tok_emb].row(id);
    const double* s = dx.row(i);
    for (std::size_t t = 0; t < d; ++t) g[t] += s[t];
  }
  return loss;
}

Prediction Retyper::predict(const LabeledExample& ex) const {
  Prediction out;
  out.binary_id = ex.input.binary_id;
  out.function_id = ex.input.function_id();
  out.predictor = kRetyperPredictor;
  std::vector<std::vector<double>> probs;
  run(encode(ex), nullptr, &probs);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    out.variables.push_back({ex.input.variables[i].decomp_name, lexicon_.at(best).type, p[best]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport gradient_check(const ModelConfig& config, double tolerance, std::size_t samples) {
  if (config.d_model > 16 || config.layers > 2) {
    throw Error(ErrorKind::kValidation, "gradient check needs d_model <= 16 and layers <= 2");
  }
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  // A lexicon with types of several sizes so the mask has work to do.
  LexiconBuilder lb;
  lb.add(TypeDescriptor::primitive("int", 4), 5);
  lb.add(TypeDescriptor::primitive("char", 1), 4);
  lb.add(TypeDescriptor::pointer(TypeDescriptor::primitive("char", 1)), 3);
  lb.add(TypeDescriptor::primitive("long", 8), 2);
  lb.add(TypeDescriptor::disappear(), 6);
  const TypeLexicon lexicon = lb.finish(1);

  LabeledExample ex;
  ex.input.binary_id = "gradcheck";
  ex.input.function = "f";
  const std::vector<std::string> words{"if", "(", ")", "return", "+", ";", "x"};
  const std::size_t len = std::min<std::size_t>(8, config.max_len);
  const std::uint64_t sizes[] = {4, 8, 1};
  const StorageKind kinds[] = {StorageKind::kStack, StorageKind::kRegister, StorageKind::kStack};
  const std::int64_t offsets[] = {-12, 0, -40};
  const char* gold[] = {"int", "long", "<disappear>"};
  for (std::size_t i = 0; i < 3; ++i) {
    ex.input.variables.push_back({"v" + std::to_string(i), {kinds[i], offsets[i], sizes[i]},
                                  TypeDescriptor::unknown()});
    ex.gold.push_back({i == 2 ? VariableFlag::kDisappear : VariableFlag::kRecovered,
                       lexicon.at(*lexicon.rank_of(gold[i])).type});
  }
  for (std::size_t p = 0; p < len; ++p) {
    Token t;
    if (p % 3 == 1) {
      t.text = "v" + std::to_string((p / 3) % 2);
      t.variable = (p / 3) % 2;
    } else {
      t.text = words[rng() % words.size()];
    }
    ex.input.tokens.tokens.push_back(std::move(t));
  }
  // Variable 2 has no placeholder: its representation is layout only.
  LabeledExample vocab_src;
  vocab_src.input.tokens.tokens = {{"if", {}}, {"(", {}}, {")", {}}, {"return", {}}, {";", {}},
                                   {"unused_a", {}}, {"unused_b", {}}};
  const TokenVocab vocab = TokenVocab::build({vocab_src});

  Retyper model(config, lexicon, vocab);
  model.set_invariant_checks(true);
  const EncodedExample enc = model.encode(ex);
  Parameters grad(model.config());
  // Mean loss, as in training.
  const double per_var = 1.0 / static_cast<double>(enc.vars.size());
  model.run(enc, &grad);

  GradCheckReport report;
  auto& params = model.params();
  constexpr double kStep = 1e-4;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t ti = rng() % params.tensors.size();
    auto& tensor = params.tensors[ti];
    const std::size_t idx = rng() % tensor.m.size();
    double& w = tensor.m.v[idx];
    const double saved = w;
    w = saved + kStep;
    const double up = model.run(enc, nullptr);
    w = saved - kStep;
    const double down = model.run(enc, nullptr);
    w = saved;
    const double numeric = (up - down) * per_var / (2 * kStep);
    const double analytic = grad.tensors[ti].m.v[idx] * per_var;
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    ++report.checked;
    report.max_rel_error = std::max(report.max_rel_error, rel);
    if (rel > tolerance) {
      report.failures.push_back({tensor.name, idx, analytic, numeric, rel});
    }
  }
  return report;
}

}  // namespace retype::model

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "crosstype/analysis.hpp"
#include "crosstype/common.hpp"
#include "crosstype/corpus.hpp"
#include "crosstype/tensor.hpp"

namespace crosstype {

enum class KernelMode { Kernelized, Plain };

inline const char* kernel_mode_name(KernelMode m) {
  return m == KernelMode::Kernelized ? "kernelized" : "plain";
}

inline KernelMode kernel_mode_from_name(const std::string& s) {
  if (s == "kernelized") return KernelMode::Kernelized;
  if (s == "plain") return KernelMode::Plain;
  throw UsageError("unknown kernel mode: " + s);
}

struct ModelConfig {
  int layers = 4;
  int heads = 4;
  int dim = 256;
  int ff_dim = 512;
  int max_seq_len = 512;
  int token_vocab = 0;
  int tag_vocab = 0;
  int type_vocab = kNumMetaTypes;
  KernelMode kernel_mode = KernelMode::Kernelized;
  bool syntax_enhancement = true;
  double sigma_init = 2.0;

  void validate() const {
    if (dim % heads != 0) {
      throw UsageError("model dim " + std::to_string(dim) +
                       " not divisible by heads " + std::to_string(heads));
    }
    if (layers < 0 || heads < 1 || dim < 1) {
      throw UsageError("invalid model configuration");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return nlohmann::json{{"layers", c.layers},
                        {"heads", c.heads},
                        {"dim", c.dim},
                        {"ff_dim", c.ff_dim},
                        {"max_seq_len", c.max_seq_len},
                        {"token_vocab", c.token_vocab},
                        {"tag_vocab", c.tag_vocab},
                        {"type_vocab", c.type_vocab},
                        {"kernel_mode", kernel_mode_name(c.kernel_mode)},
                        {"syntax_enhancement", c.syntax_enhancement},
                        {"sigma_init", c.sigma_init}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.dim = j.at("dim").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.token_vocab = j.at("token_vocab").get<int>();
  c.tag_vocab = j.at("tag_vocab").get<int>();
  c.type_vocab = j.at("type_vocab").get<int>();
  c.kernel_mode = kernel_mode_from_name(j.at("kernel_mode").get<std::string>());
  c.syntax_enhancement = j.at("syntax_enhancement").get<bool>();
  c.sigma_init = j.at("sigma_init").get<double>();
  return c;
}

// Closed token vocabulary with reserved specials up front.
struct Vocab {
  std::vector<std::string> items;
  std::map<std::string, int> index;

  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kMask = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecials = 4;

  static Vocab build(const std::vector<LabeledProgram>& programs) {
    Vocab v;
    v.items = {"[CLS]", "[SEP]", "[MASK]", "[UNK]"};
    std::set<std::string> seen;
    for (const LabeledProgram& p : programs) {
      for (const std::string& t : p.tokens) seen.insert(t);
    }
    for (const std::string& t : seen) v.items.push_back(t);
    for (size_t i = 0; i < v.items.size(); ++i) {
      v.index[v.items[i]] = static_cast<int>(i);
    }
    return v;
  }

  int id(const std::string& t) const {
    auto it = index.find(t);
    return it == index.end() ? kUnk : it->second;
  }

  int size() const { return static_cast<int>(items.size()); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write vocabulary file: " + path);
    for (const std::string& t : items) out << t << "\n";
  }

  static Vocab load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read vocabulary file: " + path);
    Vocab v;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) v.items.push_back(line);
    }
    for (size_t i = 0; i < v.items.size(); ++i) {
      v.index[v.items[i]] = static_cast<int>(i);
    }
    return v;
  }
};

// The meta-tag id space: the unified grammar tags plus the two structural
// specials used by batch framing.
inline std::vector<std::string> model_tag_vocabulary() {
  std::vector<std::string> tags = meta_tag_vocabulary();
  tags.push_back("[CLS]");
  tags.push_back("[SEP]");
  return tags;
}

inline int model_tag_id(const std::string& tag) {
  static const std::map<std::string, int> idx = [] {
    std::map<std::string, int> m;
    auto tags = model_tag_vocabulary();
    for (size_t i = 0; i < tags.size(); ++i) m[tags[i]] = static_cast<int>(i);
    return m;
  }();
  auto it = idx.find(tag);
  if (it == idx.end()) throw InternalError("unknown meta tag: " + tag);
  return it->second;
}

struct Batch {
  std::vector<int> tokens;
  std::vector<int> tags;
  std::vector<int> positions;
  std::vector<int32_t> vtc;  // n*n, includes special-token rows/columns
  std::vector<int> mlm_positions;
  std::vector<int> mlm_targets;
  int nsp_label = -1;  // -1: no sentence-pair objective in this batch
  std::vector<int> type_positions;
  std::vector<int> type_targets;
  bool is_source = true;

  int seq_len() const { return static_cast<int>(tokens.size()); }
};

struct Model {
  ModelConfig config;
  Tensor tok_emb, tag_emb, pos_emb;
  Tensor alpha, beta;  // per-dimension enhancement weights
  struct Layer {
    Tensor wq, wk, wv, wo;
    Tensor ln1_gain, ln1_bias;
    Tensor ff1_w, ff1_b, ff2_w, ff2_b;
    Tensor ln2_gain, ln2_bias;
    Tensor rho;  // sigma = exp(rho), keeps sigma positive
  };
  std::vector<Layer> layers;
  Tensor mlm_w, mlm_b;
  Tensor nsp_w, nsp_b;
  Tensor type_w, type_b;

  static Model init(const ModelConfig& config, uint64_t seed) {
    config.validate();
    Model m;
    m.config = config;
    Rng rng(derive_seed(seed, 0x0de1));
    const int d = config.dim;
    const double s = 0.05;
    m.tok_emb = param({config.token_vocab, d}, rng, s);
    m.tag_emb = param({config.tag_vocab, d}, rng, s);
    m.pos_emb = param({config.max_seq_len, d}, rng, s);
    m.alpha = param_full({d}, 1.0);
    m.beta = param_full({d}, 1.0);
    const double rho_init = std::log(config.sigma_init);
    for (int l = 0; l < config.layers; ++l) {
      Layer layer;
      layer.wq = param({d, d}, rng, s);
      layer.wk = param({d, d}, rng, s);
      layer.wv = param({d, d}, rng, s);
      layer.wo = param({d, d}, rng, s);
      layer.ln1_gain = param_full({d}, 1.0);
      layer.ln1_bias = param_full({d}, 0.0);
      layer.ff1_w = param({d, config.ff_dim}, rng, s);
      layer.ff1_b = param_full({config.ff_dim}, 0.0);
      layer.ff2_w = param({config.ff_dim, d}, rng, s);
      layer.ff2_b = param_full({d}, 0.0);
      layer.ln2_gain = param_full({d}, 1.0);
      layer.ln2_bias = param_full({d}, 0.0);
      layer.rho = param_full({1}, rho_init);
      m.layers.push_back(std::move(layer));
    }
    m.mlm_w = param({d, config.token_vocab}, rng, s);
    m.mlm_b = param_full({config.token_vocab}, 0.0);
    m.nsp_w = param({d, 2}, rng, s);
    m.nsp_b = param_full({2}, 0.0);
    m.type_w = param({d, config.type_vocab}, rng, s);
    m.type_b = param_full({config.type_vocab}, 0.0);
    return m;
  }

  std::vector<std::pair<std::string, Tensor>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out = {
        {"tok_emb", tok_emb}, {"tag_emb", tag_emb}, {"pos_emb", pos_emb},
        {"alpha", alpha},     {"beta", beta}};
    for (size_t l = 0; l < layers.size(); ++l) {
      const Layer& y = layers[l];
      std::string p = "layer" + std::to_string(l) + ".";
      out.insert(out.end(), {{p + "wq", y.wq},
                             {p + "wk", y.wk},
                             {p + "wv", y.wv},
                             {p + "wo", y.wo},
                             {p + "ln1_gain", y.ln1_gain},
                             {p + "ln1_bias", y.ln1_bias},
                             {p + "ff1_w", y.ff1_w},
                             {p + "ff1_b", y.ff1_b},
                             {p + "ff2_w", y.ff2_w},
                             {p + "ff2_b", y.ff2_b},
                             {p + "ln2_gain", y.ln2_gain},
                             {p + "ln2_bias", y.ln2_bias},
                             {p + "rho", y.rho}});
    }
    out.insert(out.end(), {{"mlm_w", mlm_w},
                           {"mlm_b", mlm_b},
                           {"nsp_w", nsp_w},
                           {"nsp_b", nsp_b},
                           {"type_w", type_w},
                           {"type_b", type_b}});
    return out;
  }

  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  double sigma_value(int layer) const {
    return std::exp(layers[layer].rho->data[0]);
  }

  // c_i = emb(x_i) (*) alpha + emb(s_i) (*) beta + pos(i)
  Tensor embed_inputs(const Batch& batch) const {
    for (int t : batch.tokens) {
      if (t < 0 || t >= config.token_vocab) {
        throw DataError("token id " + std::to_string(t) + " out of vocabulary");
      }
    }
    for (int t : batch.tags) {
      if (t < 0 || t >= config.tag_vocab) {
        throw DataError("tag id " + std::to_string(t) + " out of vocabulary");
      }
    }
    Tensor c = mul_rowvec(embedding_lookup(tok_emb, batch.tokens), alpha);
    if (config.syntax_enhancement) {
      c = add(c, mul_rowvec(embedding_lookup(tag_emb, batch.tags), beta));
    }
    return add(c, embedding_lookup(pos_emb, batch.positions));
  }

  Tensor attention(const Tensor& c, const Batch& batch, const Layer& layer) const {
    const int n = c->shape[0];
    const int d = config.dim;
    const int dh = d / config.heads;
    Tensor q = matmul(c, layer.wq);
    Tensor k = matmul(c, layer.wk);
    Tensor v = matmul(c, layer.wv);
    Tensor g;  // kernel weights shared across heads
    if (config.kernel_mode == KernelMode::Kernelized) {
      g = rbf_from_distances(exp_elem(layer.rho), batch.vtc, n);
    }
    std::vector<Tensor> heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < config.heads; ++h) {
      Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
      Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
      Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
      Tensor p = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
      if (config.kernel_mode == KernelMode::Kernelized) {
        p = normalize_rows(mul(p, g));
      }
      heads.push_back(matmul(p, vh));
    }
    return matmul(concat_cols(heads), layer.wo);
  }

  Tensor encode(const Batch& batch) const {
    const int n = batch.seq_len();
    if (n > config.max_seq_len) {
      throw DataError("sequence length " + std::to_string(n) +
                      " exceeds max " + std::to_string(config.max_seq_len));
    }
    if (static_cast<int64_t>(batch.vtc.size()) != static_cast<int64_t>(n) * n &&
        config.kernel_mode == KernelMode::Kernelized) {
      throw InternalError("vtc size does not match sequence length");
    }
    Tensor h = embed_inputs(batch);
    for (const Layer& layer : layers) {
      h = layer_norm(add(h, attention(h, batch, layer)), layer.ln1_gain,
                     layer.ln1_bias);
      Tensor ff = add_rowvec(
          matmul(gelu(add_rowvec(matmul(h, layer.ff1_w), layer.ff1_b)),
                 layer.ff2_w),
          layer.ff2_b);
      h = layer_norm(add(h, ff), layer.ln2_gain, layer.ln2_bias);
    }
    return h;
  }

  Tensor loss_mlm(const Tensor& hidden, const Batch& batch) const {
    if (batch.mlm_positions.empty()) return zeros({1});
    Tensor rows = take_rows(hidden, batch.mlm_positions);
    Tensor logits = add_rowvec(matmul(rows, mlm_w), mlm_b);
    return cross_entropy_sum(logits, batch.mlm_targets);
  }

  Tensor loss_nsp(const Tensor& hidden, const Batch& batch) const {
    if (batch.nsp_label < 0) return zeros({1});
    Tensor pooled = take_rows(hidden, {0});
    Tensor logits = add_rowvec(matmul(pooled, nsp_w), nsp_b);
    return cross_entropy_sum(logits, {batch.nsp_label});
  }

  // Sum over layers of sigma^2.
  Tensor loss_sigma() const {
    Tensor acc = zeros({1});
    for (const Layer& layer : layers) {
      Tensor s = exp_elem(layer.rho);
      acc = add(acc, mul(s, s));
    }
    return acc;
  }

  Tensor loss_pretrain(const Batch& batch, double a, double b, double g) const {
    Tensor hidden = encode(batch);
    Tensor loss = scale(loss_mlm(hidden, batch), a);
    loss = add(loss, scale(loss_nsp(hidden, batch), b));
    if (g != 0.0) loss = add(loss, scale(loss_sigma(), g));
    return loss;
  }

  Tensor type_logits(const Tensor& hidden, const std::vector<int>& positions) const {
    Tensor rows = take_rows(hidden, positions);
    return add_rowvec(matmul(rows, type_w), type_b);
  }

  // Summed NLL at the labeled sites of one program.
  Tensor loss_classify(const Batch& batch) const {
    if (batch.type_positions.empty()) return zeros({1});
    for (int t : batch.type_targets) {
      if (t < 0 || t >= config.type_vocab) {
        throw DataError("type label " + std::to_string(t) + " out of vocabulary");
      }
    }
    Tensor hidden = encode(batch);
    return cross_entropy_sum(type_logits(hidden, batch.type_positions),
                             batch.type_targets);
  }
};

// ---- Batch assembly ----

namespace detail {

// Token spans [begin, end) of the top-level statements of the function body.
inline std::vector<std::pair<int, int>> statement_spans(const Ast& ast) {
  int block = -1;
  for (int i = 0; i < static_cast<int>(ast.nodes.size()); ++i) {
    if (ast.nodes[i].kind == NodeKind::Block &&
        ast.nodes[ast.nodes[i].parent].kind == NodeKind::FuncDef) {
      block = i;
      break;
    }
  }
  std::vector<std::pair<int, int>> spans;
  if (block < 0) return spans;
  for (int stmt : ast.nodes[block].children) {
    int lo = kInfDistance, hi = -1;
    std::vector<int> stack = {stmt};
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      if (ast.nodes[n].kind == NodeKind::Terminal) {
        lo = std::min(lo, ast.nodes[n].token->index);
        hi = std::max(hi, ast.nodes[n].token->index);
      }
      for (int ch : ast.nodes[n].children) stack.push_back(ch);
    }
    if (hi >= 0) spans.emplace_back(lo, hi + 1);
  }
  return spans;
}

// Copies the program VTC submatrix for the given token subset into the
// framed batch matrix; special positions keep 0 on the diagonal and the
// unreachable sentinel everywhere else.
inline void fill_framed_vtc(std::vector<int32_t>& out, int n,
                            const VtcMatrix& vtc,
                            const std::vector<int>& source_token,
                            const std::vector<int>& segment) {
  out.assign(static_cast<size_t>(n) * n, kInfDistance);
  for (int i = 0; i < n; ++i) out[i * n + i] = 0;
  for (int i = 0; i < n; ++i) {
    if (source_token[i] < 0) continue;
    for (int j = 0; j < n; ++j) {
      if (source_token[j] < 0 || segment[i] != segment[j]) continue;
      out[i * n + j] = vtc.at(source_token[i], source_token[j]);
    }
  }
}

}  // namespace detail

// [CLS] tokens [SEP], with labeled sites shifted by the frame offset.
inline Batch make_classify_batch(const LabeledProgram& program, const Vocab& vocab,
                                 const ProgramAnalysis& analysis) {
  Batch b;
  const int n = static_cast<int>(program.tokens.size()) + 2;
  auto tags = meta_tag(analysis.ast);
  b.tokens.push_back(Vocab::kCls);
  b.tags.push_back(model_tag_id("[CLS]"));
  std::vector<int> source_token(n, -1), segment(n, 0);
  for (size_t i = 0; i < program.tokens.size(); ++i) {
    b.tokens.push_back(vocab.id(program.tokens[i]));
    b.tags.push_back(model_tag_id(tags[i]));
    source_token[i + 1] = static_cast<int>(i);
  }
  b.tokens.push_back(Vocab::kSep);
  b.tags.push_back(model_tag_id("[SEP]"));
  for (int i = 0; i < n; ++i) b.positions.push_back(i);
  detail::fill_framed_vtc(b.vtc, n, analysis.vtc, source_token, segment);
  for (const auto& [pos, type] : program.labels) {
    b.type_positions.push_back(pos + 1);
    b.type_targets.push_back(static_cast<int>(type));
  }
  return b;
}

// [CLS] segA [SEP] segB [SEP] with masked-token corruption. `other` supplies
// the random second segment for negative pairs; pass nullptr to force a
// positive pair. Programs with fewer than two statements get no pair
// objective and a single segment.
inline Batch make_pretrain_batch(const LabeledProgram& program,
                                 const ProgramAnalysis& analysis,
                                 const LabeledProgram* other,
                                 const ProgramAnalysis* other_analysis,
                                 const Vocab& vocab, Rng& rng,
                                 double mask_ratio = 0.15) {
  Batch b;
  auto spans = detail::statement_spans(analysis.ast);
  const int ntok = static_cast<int>(program.tokens.size());
  int split_begin = ntok;  // first token of segment B within this program
  bool paired = spans.size() >= 2;
  if (paired) {
    size_t half = (spans.size() + 1) / 2;
    split_begin = spans[half].first;
  }

  auto tags = meta_tag(analysis.ast);
  std::vector<int> source_token, segment;
  auto push_special = [&](int tok, const char* tag, int seg) {
    b.tokens.push_back(tok);
    b.tags.push_back(model_tag_id(tag));
    source_token.push_back(-1);
    segment.push_back(seg);
  };
  auto push_code = [&](int src, const std::vector<std::string>& toks,
                       const std::vector<std::string>& tg, int seg) {
    b.tokens.push_back(vocab.id(toks[src]));
    b.tags.push_back(model_tag_id(tg[src]));
    source_token.push_back(src);
    segment.push_back(seg);
  };

  push_special(Vocab::kCls, "[CLS]", 0);
  for (int i = 0; i < split_begin; ++i) push_code(i, program.tokens, tags, 0);
  push_special(Vocab::kSep, "[SEP]", 0);

  bool negative = paired && other != nullptr;
  if (paired) {
    if (negative) {
      auto other_spans = detail::statement_spans(other_analysis->ast);
      int other_split = static_cast<int>(other->tokens.size());
      if (other_spans.size() >= 2) {
        other_split = other_spans[(other_spans.size() + 1) / 2].first;
      } else if (!other_spans.empty()) {
        other_split = other_spans[0].first;
      }
      auto other_tags = meta_tag(other_analysis->ast);
      for (int i = other_split; i < static_cast<int>(other->tokens.size()); ++i) {
        push_code(i, other->tokens, other_tags, 1);
      }
      b.nsp_label = 1;  // does not follow
    } else {
      for (int i = split_begin; i < ntok; ++i) {
        push_code(i, program.tokens, tags, 1);
      }
      b.nsp_label = 0;  // follows
    }
    push_special(Vocab::kSep, "[SEP]", 1);
  }

  const int n = static_cast<int>(b.tokens.size());
  for (int i = 0; i < n; ++i) b.positions.push_back(i);
  // Distances within a segment come from that segment's own program; the
  // cross-segment and special entries stay unreachable. The negative case
  // needs the second program's matrix for segment 1.
  b.vtc.assign(static_cast<size_t>(n) * n, kInfDistance);
  for (int i = 0; i < n; ++i) b.vtc[i * n + i] = 0;
  for (int i = 0; i < n; ++i) {
    if (source_token[i] < 0) continue;
    for (int j = 0; j < n; ++j) {
      if (source_token[j] < 0 || segment[i] != segment[j]) continue;
      const VtcMatrix& m =
          (negative && segment[i] == 1) ? other_analysis->vtc : analysis.vtc;
      b.vtc[i * n + j] = m.at(source_token[i], source_token[j]);
    }
  }

  // 15% of code positions; of those 80% mask token, 10% random, 10% kept.
  std::vector<int> code_positions;
  for (int i = 0; i < n; ++i) {
    if (source_token[i] >= 0) code_positions.push_back(i);
  }
  rng.shuffle(code_positions);
  int num_mask = std::max<int>(
      1, static_cast<int>(mask_ratio * static_cast<double>(code_positions.size())));
  num_mask = std::min<int>(num_mask, static_cast<int>(code_positions.size()));
  std::vector<int> chosen(code_positions.begin(), code_positions.begin() + num_mask);
  std::sort(chosen.begin(), chosen.end());
  for (int pos : chosen) {
    b.mlm_positions.push_back(pos);
    b.mlm_targets.push_back(b.tokens[pos]);
    double r = rng.real();
    if (r < 0.8) {
      b.tokens[pos] = Vocab::kMask;
    } else if (r < 0.9) {
      int span = vocab.size() - Vocab::kNumSpecials;
      b.tokens[pos] =
          Vocab::kNumSpecials + static_cast<int>(rng.below(span > 0 ? span : 1));
    }  // else keep the original token
  }
  return b;
}

// ---- Checkpoints: one JSON header line, then raw little-endian float64 ----

inline void save_checkpoint(const std::string& path, const Model& model) {
  auto named = model.named_parameters();
  nlohmann::json header;
  header["config"] = config_to_json(model.config);
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : named) {
    header["tensors"].push_back({{"name", name}, {"shape", t->shape}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << header.dump() << "\n";
  for (const auto& [name, t] : named) {
    out.write(reinterpret_cast<const char*>(t->data.data()),
              static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!out) throw DataError("checkpoint write failed: " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint missing header: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint header is not valid JSON: " + path + ": " +
                    e.what());
  }
  Model model = Model::init(config_from_json(header.at("config")), 0);
  auto named = model.named_parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != named.size()) {
    throw DataError("checkpoint tensor count mismatch in " + path);
  }
  for (size_t i = 0; i < named.size(); ++i) {
    const auto& meta = tensors[i];
    if (meta.at("name").get<std::string>() != named[i].first ||
        meta.at("shape").get<std::vector<int>>() != named[i].second->shape) {
      throw DataError("checkpoint tensor mismatch at '" + named[i].first +
                      "' in " + path);
    }
    Tensor t = named[i].second;
    in.read(reinterpret_cast<char*>(t->data.data()),
            static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!in) throw DataError("checkpoint truncated at '" + named[i].first +
                             "' in " + path);
  }
  return model;
}

}  // namespace crosstype

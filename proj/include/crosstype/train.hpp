#pragma once

#include <algorithm>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "crosstype/infer.hpp"
#include "crosstype/model.hpp"

namespace crosstype {

enum class Scenario { NoTarget, PartialTarget, Augmentation };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::NoTarget: return "no-target";
    case Scenario::PartialTarget: return "partial-target";
    case Scenario::Augmentation: return "augmentation";
  }
  return "?";
}

inline Scenario scenario_from_name(const std::string& s) {
  if (s == "no-target") return Scenario::NoTarget;
  if (s == "partial-target") return Scenario::PartialTarget;
  if (s == "augmentation") return Scenario::Augmentation;
  throw UsageError("unknown scenario: " + s);
}

struct TrainConfig {
  int epochs = 30;
  int pretrain_epochs = 5;
  double lr = 1e-4;
  uint64_t seed = 0;
  Scenario scenario = Scenario::NoTarget;
  double fraction = 0.0;  // labeled-target or augmentation-source share
  double coeff_mlm = 1.0;
  double coeff_nsp = 1.0;
  double coeff_sigma = 0.01;
  double coeff_source = 1.0;
  double coeff_target = 1.0;
  double mask_ratio = 0.15;
  double clip_norm = 1.0;
  // stop fine-tuning once validation EM reaches this value (< 0 disables)
  double stop_at_val_em = -1.0;

  void validate() const {
    if (epochs < 1) throw UsageError("epochs must be >= 1");
    if (fraction < 0.0 || fraction > 1.0) {
      throw UsageError("fraction must lie in [0,1], got " +
                       std::to_string(fraction));
    }
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;   // mean total objective per program
  double mlm_per_token = 0.0;  // fixed-mask evaluation pass
  double val_em = 0.0;
  double val_f1 = 0.0;
  std::vector<double> sigmas;
};

struct TrainLog {
  double initial_mlm_per_token = 0.0;
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  int skipped = 0;  // programs dropped for sequence overflow
};

inline nlohmann::json train_log_to_json(const TrainLog& log) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const EpochLog& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"mlm_per_token", e.mlm_per_token},
                      {"val_em", e.val_em},
                      {"val_f1", e.val_f1},
                      {"sigmas", e.sigmas}});
  }
  return nlohmann::json{{"initial_mlm_per_token", log.initial_mlm_per_token},
                        {"epochs", epochs},
                        {"best_epoch", log.best_epoch},
                        {"skipped", log.skipped}};
}

// A program with its structural analysis computed once up front.
struct Prepared {
  LabeledProgram program;
  ProgramAnalysis analysis;
};

inline std::vector<Prepared> prepare_programs(
    const std::vector<LabeledProgram>& programs) {
  std::vector<Prepared> out;
  out.reserve(programs.size());
  for (const LabeledProgram& p : programs) {
    out.push_back({p, analyze_tokens(p.tokens, p.dialect)});
  }
  return out;
}

inline Model clone_model(const Model& m) {
  Model c = Model::init(m.config, 0);
  auto src = m.named_parameters();
  auto dst = c.named_parameters();
  for (size_t i = 0; i < src.size(); ++i) {
    dst[i].second->data = src[i].second->data;
  }
  return c;
}

namespace detail {

inline std::vector<double> sigma_values(const Model& m) {
  std::vector<double> out;
  for (int l = 0; l < m.config.layers; ++l) out.push_back(m.sigma_value(l));
  return out;
}

// Fixed-mask MLM evaluation: per-masked-token mean loss over the corpus,
// identical masks on every call so epochs are directly comparable.
inline double eval_mlm_per_token(const Model& model, const Vocab& vocab,
                                 const std::vector<Prepared>& corpus,
                                 const TrainConfig& config) {
  double total = 0.0;
  int64_t tokens = 0;
  Rng rng(derive_seed(config.seed, 0xe7a1));
  for (const Prepared& p : corpus) {
    Batch b = make_pretrain_batch(p.program, p.analysis, nullptr, nullptr, vocab,
                                  rng, config.mask_ratio);
    if (b.mlm_positions.empty()) continue;
    try {
      Tensor hidden = model.encode(b);
      total += model.loss_mlm(hidden, b)->data[0];
      tokens += static_cast<int64_t>(b.mlm_positions.size());
    } catch (const DataError&) {
      continue;  // overflow; counted by the training pass
    }
  }
  return tokens > 0 ? total / static_cast<double>(tokens) : 0.0;
}

}  // namespace detail

// Mean exact match of the model on a labeled validation set.
inline double validation_em(const Model& model, const Vocab& vocab,
                            const std::vector<Prepared>& val,
                            double* weighted_f1_out = nullptr) {
  std::vector<int> pred, gold;
  for (const Prepared& p : val) {
    ProgramPrediction pp;
    try {
      pp = predict(model, p.program, vocab, p.analysis);
    } catch (const DataError&) {
      continue;
    }
    for (const SitePrediction& s : pp.sites) {
      pred.push_back(argmax_label(s.dist));
      gold.push_back(static_cast<int>(p.program.labels.at(s.pos)));
    }
  }
  if (gold.empty()) {
    if (weighted_f1_out) *weighted_f1_out = 0.0;
    return 0.0;
  }
  EvalReport r = evaluate(pred, gold, model.config.type_vocab);
  if (weighted_f1_out) *weighted_f1_out = r.weighted_f1;
  return r.em;
}

// MLM + NSP + sigma-regularized pretraining over a mixed-dialect corpus.
// Single-threaded, one optimizer step per program; fully determined by
// (seed, config, data).
inline TrainLog pretrain(Model& model, const Vocab& vocab,
                         const std::vector<Prepared>& corpus,
                         const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw UsageError("pretraining corpus is empty");
  bool has_alpha = false, has_beta = false;
  for (const Prepared& p : corpus) {
    has_alpha = has_alpha || p.program.dialect == Dialect::Alpha;
    has_beta = has_beta || p.program.dialect == Dialect::Beta;
  }
  if (!has_alpha || !has_beta) {
    throw UsageError("pretraining corpus must contain both dialects");
  }

  TrainLog log;
  log.initial_mlm_per_token =
      detail::eval_mlm_per_token(model, vocab, corpus, config);
  std::vector<Tensor> params = model.parameters();
  AdamState adam;
  adam.init(params);

  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 0x1000 + static_cast<uint64_t>(epoch)));
    std::vector<int> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    double loss_sum = 0.0;
    int trained = 0;
    for (int idx : order) {
      const Prepared& p = corpus[idx];
      const Prepared* other = nullptr;
      if (corpus.size() > 1 && rng.chance(0.5)) {
        size_t j = rng.below(corpus.size() - 1);
        if (static_cast<int>(j) >= idx) ++j;
        other = &corpus[j];
      }
      Batch b;
      try {
        b = make_pretrain_batch(p.program, p.analysis,
                                other ? &other->program : nullptr,
                                other ? &other->analysis : nullptr, vocab, rng,
                                config.mask_ratio);
      } catch (const DataError&) {
        ++log.skipped;
        continue;
      }
      Tensor loss;
      try {
        loss = model.loss_pretrain(b, config.coeff_mlm, config.coeff_nsp,
                                   config.coeff_sigma);
      } catch (const DataError&) {
        ++log.skipped;
        continue;
      }
      zero_grad(params);
      backward(loss);
      clip_global_norm(params, config.clip_norm);
      adam_step(params, adam, config.lr);
      loss_sum += loss->data[0];
      ++trained;
    }
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = trained > 0 ? loss_sum / trained : 0.0;
    e.mlm_per_token = detail::eval_mlm_per_token(model, vocab, corpus, config);
    e.sigmas = detail::sigma_values(model);
    log.epochs.push_back(std::move(e));
  }
  log.best_epoch = config.pretrain_epochs;
  return log;
}

// Supervised fine-tuning on labeled source and (possibly empty) target
// sets; keeps the epoch snapshot with the best validation exact match
// (ties resolved toward the earliest epoch).
inline TrainLog finetune(Model& model, const Vocab& vocab,
                         const std::vector<Prepared>& source,
                         const std::vector<Prepared>& target,
                         const std::vector<Prepared>& val,
                         const TrainConfig& config) {
  config.validate();
  if (source.empty()) throw UsageError("fine-tuning source set is empty");

  struct Item {
    const Prepared* p;
    bool is_source;
  };
  std::vector<Item> items;
  for (const Prepared& p : source) items.push_back({&p, true});
  for (const Prepared& p : target) items.push_back({&p, false});

  TrainLog log;
  std::vector<Tensor> params = model.parameters();
  AdamState adam;
  adam.init(params);

  double best_em = -1.0;
  std::vector<std::vector<double>> best_snapshot;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, 0x2000 + static_cast<uint64_t>(epoch)));
    std::vector<int> order(items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    rng.shuffle(order);
    double loss_sum = 0.0;
    int trained = 0;
    for (int idx : order) {
      const Item& item = items[idx];
      Batch b;
      try {
        b = make_classify_batch(item.p->program, vocab, item.p->analysis);
      } catch (const DataError&) {
        ++log.skipped;
        continue;
      }
      if (b.type_positions.empty()) continue;
      Tensor loss;
      try {
        loss = scale(model.loss_classify(b),
                     item.is_source ? config.coeff_source : config.coeff_target);
      } catch (const DataError&) {
        ++log.skipped;
        continue;
      }
      zero_grad(params);
      backward(loss);
      clip_global_norm(params, config.clip_norm);
      adam_step(params, adam, config.lr);
      loss_sum += loss->data[0];
      ++trained;
    }
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = trained > 0 ? loss_sum / trained : 0.0;
    e.val_em = validation_em(model, vocab, val, &e.val_f1);
    e.sigmas = detail::sigma_values(model);
    log.epochs.push_back(e);
    if (!val.empty() && e.val_em > best_em) {
      best_em = e.val_em;
      log.best_epoch = epoch;
      best_snapshot.clear();
      for (const Tensor& t : params) best_snapshot.push_back(t->data);
    }
    if (config.stop_at_val_em >= 0.0 && e.val_em >= config.stop_at_val_em) break;
  }
  if (!best_snapshot.empty()) {
    for (size_t i = 0; i < params.size(); ++i) params[i]->data = best_snapshot[i];
  } else {
    log.best_epoch = config.epochs;  // no validation set: keep the final epoch
  }
  return log;
}

// ---- Labeled-data scenarios ----

// Partial-target selection: programs ordered by ascending count of labeled
// sites, ties by id; the first floor(fraction * n) are taken.
inline std::vector<LabeledProgram> select_partial_target(
    std::vector<LabeledProgram> target_full, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw UsageError("fraction must lie in [0,1]");
  }
  std::stable_sort(target_full.begin(), target_full.end(),
                   [](const LabeledProgram& a, const LabeledProgram& b) {
                     if (a.labels.size() != b.labels.size()) {
                       return a.labels.size() < b.labels.size();
                     }
                     return a.id < b.id;
                   });
  size_t take = static_cast<size_t>(fraction * target_full.size());
  target_full.resize(take);
  return target_full;
}

// Augmentation: the first floor(fraction * n) source programs by id.
inline std::vector<LabeledProgram> select_augmentation_source(
    std::vector<LabeledProgram> source_full, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw UsageError("fraction must lie in [0,1]");
  }
  std::stable_sort(source_full.begin(), source_full.end(),
                   [](const LabeledProgram& a, const LabeledProgram& b) {
                     return a.id < b.id;
                   });
  size_t take = static_cast<size_t>(fraction * source_full.size());
  source_full.resize(take);
  return source_full;
}

// Trains the plain and kernelized submodels for the ensemble from one
// pretrained model, with identical data and a fixed seed offset between the
// two runs.
inline constexpr uint64_t kPairSeedOffset = 1000;

struct TrainedPair {
  Model plain;
  Model kernel;
  TrainLog plain_log;
  TrainLog kernel_log;
};

inline TrainedPair train_pair(const Model& pretrained, const Vocab& vocab,
                              const std::vector<Prepared>& source,
                              const std::vector<Prepared>& target,
                              const std::vector<Prepared>& val,
                              const TrainConfig& config) {
  TrainedPair out{clone_model(pretrained), clone_model(pretrained), {}, {}};
  out.plain.config.kernel_mode = KernelMode::Plain;
  out.kernel.config.kernel_mode = KernelMode::Kernelized;
  TrainConfig plain_cfg = config;
  TrainConfig kernel_cfg = config;
  kernel_cfg.seed = config.seed + kPairSeedOffset;
  out.plain_log = finetune(out.plain, vocab, source, target, val, plain_cfg);
  out.kernel_log = finetune(out.kernel, vocab, source, target, val, kernel_cfg);
  return out;
}

}  // namespace crosstype

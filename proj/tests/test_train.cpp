#include <doctest.h>

#include <cmath>

#include "crosstype/train.hpp"

using namespace crosstype;

namespace {

std::vector<LabeledProgram> gen_corpus(uint64_t base, int n, Dialect d,
                                       int min_stmts = 2, int max_stmts = 5) {
  std::vector<LabeledProgram> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(generate_program(derive_seed(base, static_cast<uint64_t>(i)), d,
                                   min_stmts, max_stmts));
    out.back().id = i;
  }
  return out;
}

std::vector<LabeledProgram> mixed_corpus(uint64_t base, int n) {
  std::vector<LabeledProgram> out;
  for (int i = 0; i < n; ++i) {
    Dialect d = i % 2 ? Dialect::Beta : Dialect::Alpha;
    out.push_back(
        generate_program(derive_seed(base, static_cast<uint64_t>(i)), d, 2, 5));
    out.back().id = i;
  }
  return out;
}

ModelConfig tiny_config(const Vocab& vocab) {
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.dim = 16;
  c.ff_dim = 32;
  c.max_seq_len = 192;
  c.token_vocab = vocab.size();
  c.tag_vocab = static_cast<int>(model_tag_vocabulary().size());
  return c;
}

}  // namespace

TEST_CASE("pretraining validates its corpus") {
  std::vector<LabeledProgram> empty;
  Vocab vocab = Vocab::build(empty);
  ModelConfig cfg = tiny_config(vocab);
  cfg.token_vocab = 8;
  Model m = Model::init(cfg, 1);
  TrainConfig tc;
  CHECK_THROWS_AS(pretrain(m, vocab, {}, tc), UsageError);
  auto single = prepare_programs(gen_corpus(1, 4, Dialect::Alpha));
  CHECK_THROWS_AS(pretrain(m, vocab, single, tc), UsageError);
}

TEST_CASE("pretraining reduces the fixed-mask MLM loss and is deterministic") {
  auto corpus = mixed_corpus(77, 40);
  Vocab vocab = Vocab::build(corpus);
  auto prepared = prepare_programs(corpus);
  TrainConfig tc;
  tc.seed = 5;
  tc.pretrain_epochs = 2;
  tc.lr = 1e-3;

  Model m1 = Model::init(tiny_config(vocab), 9);
  TrainLog log1 = pretrain(m1, vocab, prepared, tc);
  REQUIRE(log1.epochs.size() == 2);
  CHECK(log1.epochs.back().mlm_per_token < log1.initial_mlm_per_token);
  for (const EpochLog& e : log1.epochs) {
    CHECK(e.sigmas.size() == 2);  // one sigma per layer, logged every epoch
  }

  Model m2 = Model::init(tiny_config(vocab), 9);
  TrainLog log2 = pretrain(m2, vocab, prepared, tc);
  auto a = m1.named_parameters();
  auto b = m2.named_parameters();
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].second->data == b[i].second->data);
  }
  CHECK(train_log_to_json(log1) == train_log_to_json(log2));
}

TEST_CASE("finetuning selects the earliest best validation epoch") {
  auto source = gen_corpus(101, 15, Dialect::Alpha);
  auto val = gen_corpus(707, 8, Dialect::Alpha);
  Vocab vocab = Vocab::build(source);
  auto src_p = prepare_programs(source);
  auto val_p = prepare_programs(val);
  Model m = Model::init(tiny_config(vocab), 21);
  TrainConfig tc;
  tc.seed = 3;
  tc.epochs = 4;
  tc.lr = 1e-3;
  TrainLog log = finetune(m, vocab, src_p, {}, val_p, tc);
  REQUIRE(log.epochs.size() == 4);
  double best = -1.0;
  int first_best = -1;
  for (const EpochLog& e : log.epochs) {
    if (e.val_em > best) {
      best = e.val_em;
      first_best = e.epoch;
    }
  }
  CHECK(log.best_epoch == first_best);
  // the restored snapshot reproduces the best validation EM
  CHECK(validation_em(m, vocab, val_p) == doctest::Approx(best));
}

TEST_CASE("finetuning requires a source set") {
  std::vector<LabeledProgram> none;
  Vocab vocab = Vocab::build(none);
  ModelConfig cfg = tiny_config(vocab);
  cfg.token_vocab = 8;
  Model m = Model::init(cfg, 2);
  TrainConfig tc;
  CHECK_THROWS_AS(finetune(m, vocab, {}, {}, {}, tc), UsageError);
}

TEST_CASE("partial-target selection is least-labeled-first with exact count") {
  auto target = gen_corpus(303, 10, Dialect::Beta, 1, 8);
  auto picked = select_partial_target(target, 0.5);
  CHECK(picked.size() == 5);
  for (size_t i = 1; i < picked.size(); ++i) {
    CHECK(picked[i - 1].labels.size() <= picked[i].labels.size());
  }
  // everything picked has no more labels than anything left out
  size_t max_picked = 0;
  for (const auto& p : picked) max_picked = std::max(max_picked, p.labels.size());
  std::set<int64_t> ids;
  for (const auto& p : picked) ids.insert(p.id);
  for (const auto& p : target) {
    if (!ids.count(p.id)) CHECK(p.labels.size() >= max_picked);
  }
  CHECK(select_partial_target(target, 0.0).empty());
  CHECK(select_partial_target(target, 1.0).size() == 10);
}

TEST_CASE("augmentation selection takes the id-ordered source prefix") {
  auto source = gen_corpus(404, 10, Dialect::Alpha);
  auto picked = select_augmentation_source(source, 0.3);
  REQUIRE(picked.size() == 3);
  CHECK(picked[0].id == 0);
  CHECK(picked[1].id == 1);
  CHECK(picked[2].id == 2);
}

TEST_CASE("cloned models do not share parameter storage") {
  std::vector<LabeledProgram> corpus = mixed_corpus(55, 6);
  Vocab vocab = Vocab::build(corpus);
  Model m = Model::init(tiny_config(vocab), 33);
  Model c = clone_model(m);
  double keep = m.tok_emb->data[0];
  c.tok_emb->data[0] = keep + 100.0;
  CHECK(m.tok_emb->data[0] == keep);
}

TEST_CASE("trained pair separates kernel modes") {
  auto source = gen_corpus(505, 10, Dialect::Alpha);
  auto val = gen_corpus(606, 5, Dialect::Alpha);
  Vocab vocab = Vocab::build(source);
  auto src_p = prepare_programs(source);
  auto val_p = prepare_programs(val);
  Model pre = Model::init(tiny_config(vocab), 44);
  TrainConfig tc;
  tc.seed = 8;
  tc.epochs = 2;
  tc.lr = 1e-3;
  TrainedPair pair = train_pair(pre, vocab, src_p, {}, val_p, tc);
  CHECK(pair.plain.config.kernel_mode == KernelMode::Plain);
  CHECK(pair.kernel.config.kernel_mode == KernelMode::Kernelized);

  // the plain model ignores distance input entirely
  const Prepared& p = src_p[0];
  Batch b = make_classify_batch(p.program, vocab, p.analysis);
  Tensor h1 = pair.plain.encode(b);
  Batch b2 = b;
  for (int32_t& d : b2.vtc) d = (d == kInfDistance) ? 1 : d + 2;
  Tensor h2 = pair.plain.encode(b2);
  CHECK(h1->data == h2->data);

  // the kernelized model reacts when an unreachable entry becomes close
  Tensor k1 = pair.kernel.encode(b);
  Tensor k2 = pair.kernel.encode(b2);
  double diff = 0.0;
  for (size_t i = 0; i < k1->data.size(); ++i) {
    diff = std::max(diff, std::fabs(k1->data[i] - k2->data[i]));
  }
  CHECK(diff > 1e-9);
}

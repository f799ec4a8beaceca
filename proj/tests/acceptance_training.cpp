// Acceptance criteria 9-10: pretraining sanity and supervised learnability
// at desk scale. Prints one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>

#include "crosstype/train.hpp"

using namespace crosstype;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s: %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::vector<LabeledProgram> gen_set(uint64_t base, int n, Dialect d) {
  std::vector<LabeledProgram> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(generate_program(derive_seed(base, static_cast<uint64_t>(i)), d,
                                   2, 5));
    out.back().id = i;
  }
  return out;
}

ModelConfig desk_config(const Vocab& vocab) {
  // reduced desk-scale configuration for the timed training criteria; the
  // library default stays at the full-size setting
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.dim = 32;
  c.ff_dim = 64;
  c.max_seq_len = 512;
  c.token_vocab = vocab.size();
  c.tag_vocab = static_cast<int>(model_tag_vocabulary().size());
  return c;
}

// 9. One pretraining epoch on 500 mixed-dialect programs cuts the mean MLM
// loss below 60% of its starting value.
void criterion9() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<LabeledProgram> corpus = gen_set(900, 250, Dialect::Alpha);
  std::vector<LabeledProgram> beta = gen_set(901, 250, Dialect::Beta);
  corpus.insert(corpus.end(), beta.begin(), beta.end());
  Vocab vocab = Vocab::build(corpus);
  Model model = Model::init(desk_config(vocab), 9);
  TrainConfig tc;
  tc.seed = 9;
  tc.pretrain_epochs = 1;
  tc.lr = 1e-3;
  TrainLog log = pretrain(model, vocab, prepare_programs(corpus), tc);
  double before = log.initial_mlm_per_token;
  double after = log.epochs.back().mlm_per_token;
  double dt = seconds_since(t0);
  bool ok = after < 0.6 * before && dt < 600.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "mean MLM loss %.4f -> %.4f (%.1f%% of start, need <60%%), %.1fs",
                before, after, 100.0 * after / before, dt);
  report(9, ok, buf);
}

// 10. Fine-tuning on 2000 in-dialect programs reaches validation EM >= 0.90
// within 30 epochs (hard floor 0.85).
void criterion10() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<LabeledProgram> source = gen_set(1000, 2000, Dialect::Alpha);
  std::vector<LabeledProgram> val = gen_set(1001, 200, Dialect::Alpha);
  std::vector<LabeledProgram> pre = source;
  std::vector<LabeledProgram> beta = gen_set(1002, 250, Dialect::Beta);
  pre.insert(pre.end(), beta.begin(), beta.end());
  Vocab vocab = Vocab::build(pre);
  Model model = Model::init(desk_config(vocab), 10);
  TrainConfig tc;
  tc.seed = 10;
  tc.pretrain_epochs = 1;
  tc.epochs = 30;
  tc.lr = 1e-3;
  tc.stop_at_val_em = 0.95;  // stop once comfortably past the bar
  pretrain(model, vocab, prepare_programs(pre), tc);
  TrainLog log = finetune(model, vocab, prepare_programs(source), {},
                          prepare_programs(val), tc);
  double best = 0.0;
  for (const EpochLog& e : log.epochs) best = std::max(best, e.val_em);
  double dt = seconds_since(t0);
  bool ok = best >= 0.90 && dt < 900.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "best validation EM %.4f after %zu epoch(s) "
                "(target 0.90, hard floor 0.85), %.1fs",
                best, log.epochs.size(), dt);
  report(10, ok, buf);
}

}  // namespace

int main() {
  criterion9();
  criterion10();
  return failures == 0 ? 0 : 1;
}

// Acceptance criteria 11-12: directional cross-dialect transfer at desk
// scale (alpha -> beta with no labeled target data), and bit-identical
// reproducibility of every logged metric on a rerun. Prints one PASS/FAIL
// line per criterion.
#include <chrono>
#include <cstdio>

#include "crosstype/infer.hpp"
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
    out.push_back(
        generate_program(derive_seed(base, static_cast<uint64_t>(i)), d, 2, 5));
    out.back().id = i;
  }
  return out;
}

ModelConfig desk_config(const Vocab& vocab, bool syntax_enhancement) {
  ModelConfig c;
  c.layers = 2;
  c.heads = 2;
  c.dim = 32;
  c.ff_dim = 64;
  c.max_seq_len = 512;
  c.token_vocab = vocab.size();
  c.tag_vocab = static_cast<int>(model_tag_vocabulary().size());
  c.syntax_enhancement = syntax_enhancement;
  return c;
}

// Site-level type distributions and gold labels over a prepared set, in a
// fixed (program order, ascending position) order shared by every model.
void gather(const Model& model, const Vocab& vocab,
            const std::vector<Prepared>& set,
            std::vector<std::vector<double>>* dists, std::vector<int>* gold) {
  dists->clear();
  gold->clear();
  for (const Prepared& p : set) {
    ProgramPrediction pp;
    try {
      pp = predict(model, p.program, vocab, p.analysis);
    } catch (const DataError&) {
      continue;  // same length-only condition for every model
    }
    for (SitePrediction& s : pp.sites) {
      dists->push_back(std::move(s.dist));
      gold->push_back(static_cast<int>(p.program.labels.at(s.pos)));
    }
  }
}

std::vector<int> argmax_all(const std::vector<std::vector<double>>& dists) {
  std::vector<int> out;
  out.reserve(dists.size());
  for (const std::vector<double>& d : dists) out.push_back(argmax_label(d));
  return out;
}

// One full transfer run for a seed: pretrain with and without syntax
// enhancement on source + unlabeled target programs, fine-tune the
// plain/kernelized submodel pair for each, pick lambda on target validation,
// evaluate all four system variants on the target test split. Every metric
// that gets logged goes into the returned JSON so a rerun can be compared
// byte for byte.
nlohmann::json run_transfer(uint64_t seed) {
  std::vector<LabeledProgram> source =
      gen_set(derive_seed(seed, 0x5051), 2000, Dialect::Alpha);
  std::vector<LabeledProgram> unlabeled =
      gen_set(derive_seed(seed, 0x5052), 500, Dialect::Beta);
  std::vector<LabeledProgram> val =
      gen_set(derive_seed(seed, 0x5053), 200, Dialect::Beta);
  std::vector<LabeledProgram> test =
      gen_set(derive_seed(seed, 0x5054), 400, Dialect::Beta);

  std::vector<LabeledProgram> pre_corpus = source;
  pre_corpus.insert(pre_corpus.end(), unlabeled.begin(), unlabeled.end());
  Vocab vocab = Vocab::build(pre_corpus);

  std::vector<Prepared> prep_pre = prepare_programs(pre_corpus);
  std::vector<Prepared> prep_source = prepare_programs(source);
  std::vector<Prepared> prep_val = prepare_programs(val);
  std::vector<Prepared> prep_test = prepare_programs(test);

  TrainConfig tc;
  tc.seed = seed;
  tc.pretrain_epochs = 1;
  tc.epochs = 6;
  tc.lr = 1e-3;

  nlohmann::json j;
  j["seed"] = seed;

  Model pre_se = Model::init(desk_config(vocab, true), seed);
  j["pretrain_se"] = train_log_to_json(pretrain(pre_se, vocab, prep_pre, tc));
  Model pre_ns = Model::init(desk_config(vocab, false), seed);
  j["pretrain_no_se"] = train_log_to_json(pretrain(pre_ns, vocab, prep_pre, tc));

  TrainedPair se = train_pair(pre_se, vocab, prep_source, {}, prep_val, tc);
  TrainedPair ns = train_pair(pre_ns, vocab, prep_source, {}, prep_val, tc);
  j["finetune_se_plain"] = train_log_to_json(se.plain_log);
  j["finetune_se_kernel"] = train_log_to_json(se.kernel_log);
  j["finetune_no_se_plain"] = train_log_to_json(ns.plain_log);
  j["finetune_no_se_kernel"] = train_log_to_json(ns.kernel_log);

  std::vector<std::vector<double>> vp_se, vk_se, vp_ns, vk_ns;
  std::vector<std::vector<double>> tp_se, tk_se, tp_ns, tk_ns;
  std::vector<int> val_gold, test_gold, unused;
  gather(se.plain, vocab, prep_val, &vp_se, &val_gold);
  gather(se.kernel, vocab, prep_val, &vk_se, &unused);
  gather(ns.plain, vocab, prep_val, &vp_ns, &unused);
  gather(ns.kernel, vocab, prep_val, &vk_ns, &unused);
  gather(se.plain, vocab, prep_test, &tp_se, &test_gold);
  gather(se.kernel, vocab, prep_test, &tk_se, &unused);
  gather(ns.plain, vocab, prep_test, &tp_ns, &unused);
  gather(ns.kernel, vocab, prep_test, &tk_ns, &unused);

  std::vector<double> grid = default_lambda_grid();
  double lam_full = select_lambda(vp_se, vk_se, val_gold, grid);
  double lam_wo_se = select_lambda(vp_ns, vk_ns, val_gold, grid);
  j["lambda_full"] = lam_full;
  j["lambda_wo_se"] = lam_wo_se;

  const int classes = kNumMetaTypes;
  j["test_em_full"] =
      evaluate(kappa_bagging(tp_se, tk_se, lam_full), test_gold, classes).em;
  j["test_em_wo_se"] =
      evaluate(kappa_bagging(tp_ns, tk_ns, lam_wo_se), test_gold, classes).em;
  j["test_em_kernel_only"] = evaluate(argmax_all(tk_se), test_gold, classes).em;
  j["test_em_sequence_only"] =
      evaluate(argmax_all(tp_ns), test_gold, classes).em;
  j["test_f1_full"] =
      evaluate(kappa_bagging(tp_se, tk_se, lam_full), test_gold, classes)
          .weighted_f1;
  return j;
}

std::string criterion11(std::string* seed0_dump) {
  const uint64_t seeds[] = {0, 1, 2};
  double full = 0.0, wo_se = 0.0, kernel_only = 0.0, seq_only = 0.0;
  for (uint64_t s : seeds) {
    nlohmann::json j = run_transfer(s);
    std::printf(
        "  seed %llu: full %.4f (lambda %.1f) | w/o SE %.4f | kernel-only "
        "%.4f | sequence-only %.4f\n",
        static_cast<unsigned long long>(s), j["test_em_full"].get<double>(),
        j["lambda_full"].get<double>(), j["test_em_wo_se"].get<double>(),
        j["test_em_kernel_only"].get<double>(),
        j["test_em_sequence_only"].get<double>());
    full += j["test_em_full"].get<double>() / 3.0;
    wo_se += j["test_em_wo_se"].get<double>() / 3.0;
    kernel_only += j["test_em_kernel_only"].get<double>() / 3.0;
    seq_only += j["test_em_sequence_only"].get<double>() / 3.0;
    if (s == 0) *seed0_dump = j.dump();
  }
  bool ok = full >= seq_only && full >= wo_se;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "mean test EM: full %.4f >= w/o-SE %.4f and >= sequence-only "
                "%.4f (kernel-only %.4f)",
                full, wo_se, seq_only, kernel_only);
  report(11, ok, buf);
  return buf;
}

void criterion12(const std::string& seed0_dump) {
  std::string rerun = run_transfer(0).dump();
  bool ok = rerun == seed0_dump;
  report(12, ok,
         ok ? "seed-0 rerun reproduces every logged metric bit-identically"
            : "seed-0 rerun diverged from the first run");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  std::string seed0_dump;
  criterion11(&seed0_dump);
  double dt11 = seconds_since(t0);
  std::printf("  criterion 11 runtime: %.1fs (budget 2700s)\n", dt11);
  if (dt11 >= 2700.0) {
    std::printf("criterion 11 FAIL: runtime budget exceeded\n");
    ++failures;
  }
  criterion12(seed0_dump);
  return failures == 0 ? 0 : 1;
}

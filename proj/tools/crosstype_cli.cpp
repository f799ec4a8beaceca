// Command-line pipeline: corpus generation, structural analysis, training,
// inference, evaluation, and the ablation table.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "crosstype/infer.hpp"
#include "crosstype/train.hpp"

using namespace crosstype;

namespace {

struct CliOptions {
  uint64_t seed = 0;
  int n = 100;
  std::string dialect = "alpha";
  int min_stmts = 2;
  int max_stmts = 8;
  std::string in_path, out_path, log_path, config_path;
  std::string checkpoint, checkpoint_out, vocab_path;
  std::string source_path, target_path, val_path, test_path, pred_path, gold_path;
  std::string scenario = "no-target";
  std::string kernel_mode = "kernelized";
  double fraction = 0.0;
  int epochs = 30;
  int pretrain_epochs = 5;
  double lr = 1e-4;
  int layers = 4, heads = 4, dim = 256, ff_dim = 512, max_seq_len = 512;
  bool no_syntax_enhancement = false;
  double sigma_init = 2.0;
  double coeff_mlm = 1.0, coeff_nsp = 1.0, coeff_sigma = 0.01;
  double coeff_source = 1.0, coeff_target = 1.0;
  double mask_ratio = 0.15;
};

// Values from a JSON config file seed the options; explicitly passed flags
// win afterwards because CLI11 parses them on top.
void apply_config_file(CliOptions& o) {
  if (o.config_path.empty()) return;
  std::ifstream in(o.config_path);
  if (!in) throw UsageError("cannot read config file: " + o.config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + o.config_path + " is not valid JSON: " +
                     e.what());
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("seed", o.seed);
  get("epochs", o.epochs);
  get("pretrain_epochs", o.pretrain_epochs);
  get("lr", o.lr);
  get("layers", o.layers);
  get("heads", o.heads);
  get("dim", o.dim);
  get("ff_dim", o.ff_dim);
  get("max_seq_len", o.max_seq_len);
  get("kernel_mode", o.kernel_mode);
  get("scenario", o.scenario);
  get("fraction", o.fraction);
  get("coeff_mlm", o.coeff_mlm);
  get("coeff_nsp", o.coeff_nsp);
  get("coeff_sigma", o.coeff_sigma);
  get("coeff_source", o.coeff_source);
  get("coeff_target", o.coeff_target);
  get("mask_ratio", o.mask_ratio);
  get("sigma_init", o.sigma_init);
  get("min_stmts", o.min_stmts);
  get("max_stmts", o.max_stmts);
}

TrainConfig train_config_of(const CliOptions& o) {
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.pretrain_epochs = o.pretrain_epochs;
  tc.lr = o.lr;
  tc.seed = o.seed;
  tc.scenario = scenario_from_name(o.scenario);
  tc.fraction = o.fraction;
  tc.coeff_mlm = o.coeff_mlm;
  tc.coeff_nsp = o.coeff_nsp;
  tc.coeff_sigma = o.coeff_sigma;
  tc.coeff_source = o.coeff_source;
  tc.coeff_target = o.coeff_target;
  tc.mask_ratio = o.mask_ratio;
  tc.validate();
  return tc;
}

ModelConfig model_config_of(const CliOptions& o, const Vocab& vocab) {
  ModelConfig mc;
  mc.layers = o.layers;
  mc.heads = o.heads;
  mc.dim = o.dim;
  mc.ff_dim = o.ff_dim;
  mc.max_seq_len = o.max_seq_len;
  mc.token_vocab = vocab.size();
  mc.tag_vocab = static_cast<int>(model_tag_vocabulary().size());
  mc.kernel_mode = kernel_mode_from_name(o.kernel_mode);
  mc.syntax_enhancement = !o.no_syntax_enhancement;
  mc.sigma_init = o.sigma_init;
  mc.validate();
  return mc;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

void cmd_gen(const CliOptions& o) {
  Dialect d = dialect_from_name(o.dialect);
  std::vector<LabeledProgram> programs;
  for (int i = 0; i < o.n; ++i) {
    LabeledProgram p = generate_program(derive_seed(o.seed, static_cast<uint64_t>(i)),
                                        d, o.min_stmts, o.max_stmts);
    p.id = i;
    programs.push_back(std::move(p));
  }
  write_dataset(o.out_path, programs);
  std::cout << "wrote " << programs.size() << " programs to " << o.out_path << "\n";
}

void cmd_analyze(const CliOptions& o) {
  auto programs = read_dataset(o.in_path);
  std::ofstream out(o.out_path);
  if (!out) throw DataError("cannot write " + o.out_path);
  for (const LabeledProgram& p : programs) {
    ProgramAnalysis a = analyze_tokens(p.tokens, p.dialect);
    nlohmann::json j = vtc_to_json(a);
    j["id"] = p.id;
    out << j.dump() << "\n";
  }
  std::cout << "analyzed " << programs.size() << " programs into " << o.out_path
            << "\n";
}

void cmd_pretrain(const CliOptions& o) {
  auto programs = read_dataset(o.in_path);
  Vocab vocab = Vocab::build(programs);
  Model model = Model::init(model_config_of(o, vocab), o.seed);
  TrainConfig tc = train_config_of(o);
  auto prepared = prepare_programs(programs);
  TrainLog log = pretrain(model, vocab, prepared, tc);
  save_checkpoint(o.checkpoint_out, model);
  std::string vpath = o.vocab_path.empty() ? o.checkpoint_out + ".vocab"
                                           : o.vocab_path;
  vocab.save(vpath);
  if (!o.log_path.empty()) write_json_file(o.log_path, train_log_to_json(log));
  std::cout << "pretrained " << o.pretrain_epochs << " epochs; mlm/token "
            << log.initial_mlm_per_token << " -> "
            << (log.epochs.empty() ? 0.0 : log.epochs.back().mlm_per_token)
            << "; checkpoint " << o.checkpoint_out << "\n";
}

void cmd_finetune(const CliOptions& o) {
  Model model = load_checkpoint(o.checkpoint);
  model.config.kernel_mode = kernel_mode_from_name(o.kernel_mode);
  std::string vpath = o.vocab_path.empty() ? o.checkpoint + ".vocab" : o.vocab_path;
  Vocab vocab = Vocab::load(vpath);
  TrainConfig tc = train_config_of(o);

  auto source = read_dataset(o.source_path);
  std::vector<LabeledProgram> target;
  if (!o.target_path.empty()) target = read_dataset(o.target_path);
  std::vector<LabeledProgram> val;
  if (!o.val_path.empty()) val = read_dataset(o.val_path);

  switch (tc.scenario) {
    case Scenario::NoTarget:
      target.clear();
      break;
    case Scenario::PartialTarget:
      target = select_partial_target(target, tc.fraction);
      break;
    case Scenario::Augmentation:
      source = select_augmentation_source(source, tc.fraction);
      break;
  }

  auto src_p = prepare_programs(source);
  auto tgt_p = prepare_programs(target);
  auto val_p = prepare_programs(val);
  TrainLog log = finetune(model, vocab, src_p, tgt_p, val_p, tc);
  save_checkpoint(o.checkpoint_out, model);
  vocab.save(o.checkpoint_out + ".vocab");
  if (!o.log_path.empty()) write_json_file(o.log_path, train_log_to_json(log));
  std::cout << "finetuned; best epoch " << log.best_epoch << " val EM "
            << (log.best_epoch >= 1 &&
                        log.best_epoch <= static_cast<int>(log.epochs.size())
                    ? log.epochs[log.best_epoch - 1].val_em
                    : 0.0)
            << "; checkpoint " << o.checkpoint_out << "\n";
}

void cmd_predict(const CliOptions& o) {
  Model model = load_checkpoint(o.checkpoint);
  std::string vpath = o.vocab_path.empty() ? o.checkpoint + ".vocab" : o.vocab_path;
  Vocab vocab = Vocab::load(vpath);
  auto programs = read_dataset(o.in_path);
  std::vector<ProgramPrediction> preds;
  int skipped = 0;
  for (const LabeledProgram& p : programs) {
    try {
      preds.push_back(predict(model, p, vocab, analyze_tokens(p.tokens, p.dialect)));
    } catch (const DataError&) {
      ++skipped;
    }
  }
  write_predictions(o.out_path, preds);
  std::cout << "predicted " << preds.size() << " programs";
  if (skipped > 0) std::cout << " (skipped " << skipped << " for overflow)";
  std::cout << " into " << o.out_path << "\n";
}

void cmd_eval(const CliOptions& o) {
  auto preds = read_predictions(o.pred_path);
  auto gold = read_dataset(o.gold_path);
  std::vector<std::vector<double>> dists;
  std::vector<int> labels;
  flatten_sites(preds, gold, dists, labels);
  std::vector<int> hard;
  for (const auto& d : dists) hard.push_back(argmax_label(d));
  EvalReport r = evaluate(hard, labels, kNumMetaTypes);
  nlohmann::json j = report_to_json(r);
  if (!o.out_path.empty()) write_json_file(o.out_path, j);
  std::cout << j.dump(2) << "\n";
}

// One end-to-end transfer run: pretrain on both dialects, fine-tune under a
// scenario, ensemble with the selected lambda, report test EM/weighted-F1.
struct VariantResult {
  std::string name;
  double em = 0.0;
  double weighted_f1 = 0.0;
  double lambda = 0.0;
};

struct AblationData {
  Vocab vocab;
  std::vector<Prepared> pretrain_corpus;
  std::vector<Prepared> source, target, val, test;
};

VariantResult run_variant(const std::string& name, bool syntax_enhancement,
                          bool use_kernel_submodel, bool use_plain_submodel,
                          const AblationData& data, const CliOptions& o) {
  CliOptions vo = o;
  vo.no_syntax_enhancement = !syntax_enhancement;
  vo.kernel_mode = "kernelized";
  Model pre = Model::init(model_config_of(vo, data.vocab), o.seed);
  TrainConfig tc = train_config_of(o);
  pretrain(pre, data.vocab, data.pretrain_corpus, tc);

  VariantResult r;
  r.name = name;
  std::vector<std::vector<double>> val_plain, val_kernel, test_plain, test_kernel;
  std::vector<int> val_gold, test_gold;
  auto collect = [&](const Model& m, const std::vector<Prepared>& set,
                     std::vector<std::vector<double>>& dists,
                     std::vector<int>* gold) {
    for (const Prepared& p : set) {
      ProgramPrediction pp = predict(m, p.program, data.vocab, p.analysis);
      for (const SitePrediction& s : pp.sites) {
        dists.push_back(s.dist);
        if (gold) gold->push_back(static_cast<int>(p.program.labels.at(s.pos)));
      }
    }
  };

  if (use_kernel_submodel && use_plain_submodel) {
    TrainedPair pair =
        train_pair(pre, data.vocab, data.source, data.target, data.val, tc);
    collect(pair.plain, data.val, val_plain, &val_gold);
    collect(pair.kernel, data.val, val_kernel, nullptr);
    r.lambda = select_lambda(val_plain, val_kernel, val_gold,
                             default_lambda_grid());
    collect(pair.plain, data.test, test_plain, &test_gold);
    collect(pair.kernel, data.test, test_kernel, nullptr);
    std::vector<int> labels = kappa_bagging(test_plain, test_kernel, r.lambda);
    EvalReport rep = evaluate(labels, test_gold, kNumMetaTypes);
    r.em = rep.em;
    r.weighted_f1 = rep.weighted_f1;
    return r;
  }

  Model sub = clone_model(pre);
  sub.config.kernel_mode =
      use_kernel_submodel ? KernelMode::Kernelized : KernelMode::Plain;
  finetune(sub, data.vocab, data.source, data.target, data.val, tc);
  collect(sub, data.test, test_plain, &test_gold);
  std::vector<int> labels;
  for (const auto& d : test_plain) labels.push_back(argmax_label(d));
  EvalReport rep = evaluate(labels, test_gold, kNumMetaTypes);
  r.em = rep.em;
  r.weighted_f1 = rep.weighted_f1;
  r.lambda = use_kernel_submodel ? 1.0 : 0.0;
  return r;
}

void cmd_ablate(const CliOptions& o) {
  auto source = read_dataset(o.source_path);
  auto target = read_dataset(o.target_path);
  auto val = read_dataset(o.val_path);
  auto test = read_dataset(o.test_path);

  AblationData data;
  {
    std::vector<LabeledProgram> all = source;
    all.insert(all.end(), target.begin(), target.end());
    all.insert(all.end(), val.begin(), val.end());
    all.insert(all.end(), test.begin(), test.end());
    data.vocab = Vocab::build(all);
  }
  std::vector<LabeledProgram> pre_corpus = source;
  pre_corpus.insert(pre_corpus.end(), target.begin(), target.end());
  if (!target.empty()) {
    data.pretrain_corpus = prepare_programs(pre_corpus);
  } else {
    // no labeled target: still pretrain on both dialects via val programs
    pre_corpus.insert(pre_corpus.end(), val.begin(), val.end());
    data.pretrain_corpus = prepare_programs(pre_corpus);
  }
  data.source = prepare_programs(source);
  data.target = prepare_programs(target);
  data.val = prepare_programs(val);
  data.test = prepare_programs(test);

  std::vector<VariantResult> rows = {
      run_variant("full", true, true, true, data, o),
      run_variant("w/o SE", false, true, true, data, o),
      run_variant("kernel-only", true, true, false, data, o),
      run_variant("sequence-only", false, false, true, data, o),
  };
  nlohmann::json j = nlohmann::json::array();
  std::cout << "variant         EM        weighted-F1  lambda\n";
  for (const VariantResult& r : rows) {
    j.push_back({{"variant", r.name},
                 {"em", r.em},
                 {"weighted_f1", r.weighted_f1},
                 {"lambda", r.lambda}});
    std::printf("%-14s  %.6f  %.6f     %.1f\n", r.name.c_str(), r.em,
                r.weighted_f1, r.lambda);
  }
  if (!o.out_path.empty()) write_json_file(o.out_path, j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-dialect statistical type inference pipeline"};
  app.require_subcommand(1);
  CliOptions o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "base RNG seed");
    cmd->add_option("--config", o.config_path, "JSON config file (flags override)");
  };
  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--pretrain-epochs", o.pretrain_epochs);
    cmd->add_option("--lr", o.lr);
    cmd->add_option("--layers", o.layers);
    cmd->add_option("--heads", o.heads);
    cmd->add_option("--dim", o.dim);
    cmd->add_option("--ff-dim", o.ff_dim);
    cmd->add_option("--max-seq-len", o.max_seq_len);
    cmd->add_option("--kernel-mode", o.kernel_mode, "kernelized|plain");
    cmd->add_flag("--no-syntax-enhancement", o.no_syntax_enhancement);
    cmd->add_option("--sigma-init", o.sigma_init);
    cmd->add_option("--coeff-mlm", o.coeff_mlm);
    cmd->add_option("--coeff-nsp", o.coeff_nsp);
    cmd->add_option("--coeff-sigma", o.coeff_sigma);
    cmd->add_option("--coeff-source", o.coeff_source);
    cmd->add_option("--coeff-target", o.coeff_target);
    cmd->add_option("--mask-ratio", o.mask_ratio);
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a labeled dataset");
  add_common(gen);
  gen->add_option("--n", o.n, "number of programs");
  gen->add_option("--dialect", o.dialect, "alpha|beta")->required();
  gen->add_option("--out", o.out_path)->required();
  gen->add_option("--min-stmts", o.min_stmts);
  gen->add_option("--max-stmts", o.max_stmts);

  CLI::App* analyze = app.add_subcommand("analyze", "emit distance sidecars");
  add_common(analyze);
  analyze->add_option("--in", o.in_path)->required();
  analyze->add_option("--out", o.out_path)->required();

  CLI::App* pre = app.add_subcommand("pretrain", "masked/pair pretraining");
  add_common(pre);
  add_train_flags(pre);
  pre->add_option("--data", o.in_path)->required();
  pre->add_option("--out", o.checkpoint_out)->required();
  pre->add_option("--vocab-out", o.vocab_path);
  pre->add_option("--log", o.log_path);

  CLI::App* fine = app.add_subcommand("finetune", "supervised fine-tuning");
  add_common(fine);
  add_train_flags(fine);
  fine->add_option("--checkpoint", o.checkpoint)->required();
  fine->add_option("--vocab", o.vocab_path);
  fine->add_option("--source", o.source_path)->required();
  fine->add_option("--target", o.target_path);
  fine->add_option("--val", o.val_path);
  fine->add_option("--out", o.checkpoint_out)->required();
  fine->add_option("--log", o.log_path);
  fine->add_option("--scenario", o.scenario,
                   "no-target|partial-target|augmentation");
  fine->add_option("--fraction", o.fraction);

  CLI::App* predict_cmd = app.add_subcommand("predict", "per-site distributions");
  add_common(predict_cmd);
  predict_cmd->add_option("--checkpoint", o.checkpoint)->required();
  predict_cmd->add_option("--vocab", o.vocab_path);
  predict_cmd->add_option("--in", o.in_path)->required();
  predict_cmd->add_option("--out", o.out_path)->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions");
  add_common(eval_cmd);
  eval_cmd->add_option("--pred", o.pred_path)->required();
  eval_cmd->add_option("--gold", o.gold_path)->required();
  eval_cmd->add_option("--out", o.out_path);

  CLI::App* ablate = app.add_subcommand("ablate", "four-variant comparison");
  add_common(ablate);
  add_train_flags(ablate);
  ablate->add_option("--source", o.source_path)->required();
  ablate->add_option("--target", o.target_path)->required();
  ablate->add_option("--val", o.val_path)->required();
  ablate->add_option("--test", o.test_path)->required();
  ablate->add_option("--scenario", o.scenario);
  ablate->add_option("--fraction", o.fraction);
  ablate->add_option("--out", o.out_path);

  // Config file values must load before flag values stick, so parse twice:
  // once to capture --config, then again over the seeded defaults.
  try {
    app.parse(argc, argv);
    if (!o.config_path.empty()) {
      CliOptions fresh;
      fresh.config_path = o.config_path;
      apply_config_file(fresh);
      o = fresh;
      app.clear();
      app.parse(argc, argv);
    }
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) cmd_gen(o);
    if (analyze->parsed()) cmd_analyze(o);
    if (pre->parsed()) cmd_pretrain(o);
    if (fine->parsed()) cmd_finetune(o);
    if (predict_cmd->parsed()) cmd_predict(o);
    if (eval_cmd->parsed()) cmd_eval(o);
    if (ablate->parsed()) cmd_ablate(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

#include <doctest.h>

#include <cstdio>

#include "crosstype/infer.hpp"
#include "oracles.hpp"

using namespace crosstype;

namespace {

std::vector<std::vector<double>> random_dists(Rng& rng, int sites, int classes) {
  std::vector<std::vector<double>> out(sites, std::vector<double>(classes));
  for (auto& row : out) {
    double z = 0.0;
    for (double& v : row) {
      v = rng.real() + 1e-6;
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return out;
}

}  // namespace

TEST_CASE("bagging arithmetic and degeneracy") {
  std::vector<std::vector<double>> plain = {{0.6, 0.4}};
  std::vector<std::vector<double>> kernel = {{0.2, 0.8}};
  CHECK(kappa_bagging(plain, kernel, 0.5) == std::vector<int>{1});
  CHECK(kappa_bagging(plain, kernel, 0.0) == std::vector<int>{0});
  CHECK(kappa_bagging(plain, kernel, 1.0) == std::vector<int>{1});
  CHECK_THROWS_AS(kappa_bagging(plain, kernel, 1.5), UsageError);
  std::vector<std::vector<double>> short_kernel;
  CHECK_THROWS_AS(kappa_bagging(plain, short_kernel, 0.5), InternalError);
}

TEST_CASE("bagging ties break toward the lowest type id") {
  std::vector<std::vector<double>> a = {{0.5, 0.5, 0.0}};
  std::vector<std::vector<double>> b = {{0.5, 0.5, 0.0}};
  CHECK(kappa_bagging(a, b, 0.3) == std::vector<int>{0});
}

TEST_CASE("bagging argmax is scale invariant per site") {
  Rng rng(1);
  auto plain = random_dists(rng, 50, 4);
  auto kernel = random_dists(rng, 50, 4);
  auto base = kappa_bagging(plain, kernel, 0.4);
  for (auto& row : plain) {
    for (double& v : row) v *= 7.0;
  }
  for (auto& row : kernel) {
    for (double& v : row) v *= 7.0;
  }
  CHECK(kappa_bagging(plain, kernel, 0.4) == base);
}

TEST_CASE("ensemble degeneracy holds across many random sites") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto plain = random_dists(rng, 8, kNumMetaTypes);
    auto kernel = random_dists(rng, 8, kNumMetaTypes);
    std::vector<int> want_plain, want_kernel;
    for (int s = 0; s < 8; ++s) {
      want_plain.push_back(argmax_label(plain[s]));
      want_kernel.push_back(argmax_label(kernel[s]));
    }
    CHECK(kappa_bagging(plain, kernel, 0.0) == want_plain);
    CHECK(kappa_bagging(plain, kernel, 1.0) == want_kernel);
  }
}

TEST_CASE("worked metrics example") {
  // gold [A,A,B,B], pred [A,B,B,B]
  std::vector<int> gold = {0, 0, 1, 1};
  std::vector<int> pred = {0, 1, 1, 1};
  EvalReport r = evaluate(pred, gold, 2);
  CHECK(r.em == doctest::Approx(0.75));
  CHECK(std::fabs(r.weighted_f1 - (0.5 * (2.0 / 3.0) + 0.5 * 0.8)) <= 1e-9);
  CHECK(r.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class[1].f1 == doctest::Approx(0.8));
  CHECK(r.per_class[0].support == 2);
}

TEST_CASE("perfect predictions score one on both metrics") {
  std::vector<int> gold = {0, 1, 2, 3, 2, 1};
  EvalReport r = evaluate(gold, gold, 4);
  CHECK(r.em == 1.0);
  CHECK(r.weighted_f1 == doctest::Approx(1.0));
}

TEST_CASE("absent classes carry zero weight") {
  std::vector<int> gold = {0, 0};
  std::vector<int> pred = {0, 0};
  EvalReport r = evaluate(pred, gold, 4);
  CHECK(r.weighted_f1 == doctest::Approx(1.0));
  CHECK(r.per_class[3].support == 0);
}

TEST_CASE("metrics agree with the counting oracle on random vectors") {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(rng.below(40));
    std::vector<int> gold(n), pred(n);
    for (int i = 0; i < n; ++i) {
      gold[i] = static_cast<int>(rng.below(kNumMetaTypes));
      pred[i] = static_cast<int>(rng.below(kNumMetaTypes));
    }
    EvalReport r = evaluate(pred, gold, kNumMetaTypes);
    CHECK(r.em == doctest::Approx(oracle::em_oracle(pred, gold)).epsilon(1e-12));
    CHECK(r.weighted_f1 ==
          doctest::Approx(oracle::weighted_f1_oracle(pred, gold, kNumMetaTypes))
              .epsilon(1e-12));
  }
}

TEST_CASE("metrics are permutation invariant over sites") {
  Rng rng(4);
  std::vector<int> gold(30), pred(30);
  for (int i = 0; i < 30; ++i) {
    gold[i] = static_cast<int>(rng.below(4));
    pred[i] = static_cast<int>(rng.below(4));
  }
  EvalReport before = evaluate(pred, gold, 4);
  std::vector<int> perm(30);
  for (int i = 0; i < 30; ++i) perm[i] = i;
  rng.shuffle(perm);
  std::vector<int> g2(30), p2(30);
  for (int i = 0; i < 30; ++i) {
    g2[i] = gold[perm[i]];
    p2[i] = pred[perm[i]];
  }
  EvalReport after = evaluate(p2, g2, 4);
  CHECK(before.em == doctest::Approx(after.em));
  CHECK(before.weighted_f1 == doctest::Approx(after.weighted_f1));
}

TEST_CASE("lambda selection maximizes validation EM with low ties") {
  // gold favors the kernel distribution at every site
  std::vector<std::vector<double>> plain = {{0.9, 0.1}, {0.8, 0.2}};
  std::vector<std::vector<double>> kernel = {{0.1, 0.9}, {0.2, 0.8}};
  std::vector<int> gold = {1, 1};
  CHECK(select_lambda(plain, kernel, gold, default_lambda_grid()) ==
        doctest::Approx(0.6));
  // all-equal outcomes pick the smallest lambda
  std::vector<int> gold0 = {0, 0};
  std::vector<std::vector<double>> same = {{0.9, 0.1}, {0.8, 0.2}};
  CHECK(select_lambda(same, same, gold0, default_lambda_grid()) == 0.0);
  CHECK_THROWS_AS(select_lambda(plain, kernel, {}, default_lambda_grid()),
                  UsageError);
  CHECK_THROWS_AS(select_lambda(plain, kernel, gold, {}), UsageError);
}

TEST_CASE("grid endpoints reduce lambda selection to submodel choice") {
  Rng rng(5);
  auto plain = random_dists(rng, 20, 4);
  auto kernel = random_dists(rng, 20, 4);
  std::vector<int> gold(20);
  for (int i = 0; i < 20; ++i) gold[i] = static_cast<int>(rng.below(4));
  double em_plain = exact_match(kappa_bagging(plain, kernel, 0.0), gold);
  double em_kernel = exact_match(kappa_bagging(plain, kernel, 1.0), gold);
  double pick = select_lambda(plain, kernel, gold, {0.0, 1.0});
  if (em_kernel > em_plain) {
    CHECK(pick == 1.0);
  } else {
    CHECK(pick == 0.0);
  }
}

TEST_CASE("predictions serialize and read back") {
  ProgramPrediction p;
  p.id = 42;
  p.sites.push_back({3, {0.1, 0.2, 0.3, 0.4}});
  p.sites.push_back({7, {0.7, 0.1, 0.1, 0.1}});
  std::string path = "pred_roundtrip.jsonl";
  write_predictions(path, {p});
  auto back = read_predictions(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == 42);
  REQUIRE(back[0].sites.size() == 2);
  CHECK(back[0].sites[1].pos == 7);
  CHECK(back[0].sites[0].dist == p.sites[0].dist);
  nlohmann::json j = prediction_to_json(p);
  CHECK(j["sites"][0]["pred"] == "list");
  CHECK(j["sites"][1]["pred"] == "Boolean");
  std::remove(path.c_str());
}

TEST_CASE("model predictions are normalized, deterministic, and mask aware") {
  std::vector<LabeledProgram> corpus;
  for (uint64_t s = 0; s < 12; ++s) {
    corpus.push_back(generate_program(s, s % 2 ? Dialect::Beta : Dialect::Alpha, 2, 6));
    corpus.back().id = static_cast<int64_t>(s);
  }
  Vocab vocab = Vocab::build(corpus);
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.dim = 8;
  cfg.ff_dim = 16;
  cfg.max_seq_len = 192;
  cfg.token_vocab = vocab.size();
  cfg.tag_vocab = static_cast<int>(model_tag_vocabulary().size());
  Model m = Model::init(cfg, 7);
  const LabeledProgram& p = corpus[0];
  auto analysis = analyze_tokens(p.tokens, p.dialect);
  ProgramPrediction a = predict(m, p, vocab, analysis);
  ProgramPrediction b = predict(m, p, vocab, analysis);
  REQUIRE(!a.sites.empty());
  CHECK(a.sites.size() == p.labels.size());
  for (size_t i = 0; i < a.sites.size(); ++i) {
    double z = 0.0;
    for (double v : a.sites[i].dist) z += v;
    CHECK(std::fabs(z - 1.0) <= 1e-9);
    CHECK(a.sites[i].dist == b.sites[i].dist);
  }
  // a kernelized model's site distribution ignores the CLS embedding,
  // which sits at unreachable distance from every code token
  for (int j = 0; j < cfg.dim; ++j) {
    m.tok_emb->data[Vocab::kCls * cfg.dim + j] += 3.0;
  }
  ProgramPrediction c = predict(m, p, vocab, analysis);
  for (size_t i = 0; i < a.sites.size(); ++i) {
    for (size_t k = 0; k < a.sites[i].dist.size(); ++k) {
      CHECK(std::fabs(c.sites[i].dist[k] - a.sites[i].dist[k]) <= 1e-12);
    }
  }
}

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "crosstype/model.hpp"

namespace crosstype {

struct SitePrediction {
  int pos = 0;
  std::vector<double> dist;  // probability over the type vocabulary
};

struct ProgramPrediction {
  int64_t id = 0;
  std::vector<SitePrediction> sites;
};

// Forward pass in inference mode; distributions at the labeled sites only,
// in ascending token position.
inline ProgramPrediction predict(const Model& model, const LabeledProgram& program,
                                 const Vocab& vocab,
                                 const ProgramAnalysis& analysis) {
  Batch b = make_classify_batch(program, vocab, analysis);
  ProgramPrediction out;
  out.id = program.id;
  if (b.type_positions.empty()) return out;
  Tensor hidden = model.encode(b);
  Tensor probs = softmax_rows(model.type_logits(hidden, b.type_positions));
  const int k = static_cast<int>(b.type_positions.size());
  const int c = model.config.type_vocab;
  for (int i = 0; i < k; ++i) {
    SitePrediction site;
    site.pos = b.type_positions[i] - 1;  // undo the frame offset
    site.dist.assign(probs->data.begin() + i * c,
                     probs->data.begin() + (i + 1) * c);
    out.sites.push_back(std::move(site));
  }
  return out;
}

// Argmax with ties broken by the lowest type id.
inline int argmax_label(const std::vector<double>& dist) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(dist.size()); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return best;
}

// h_ensemble = lambda * h_kernel + (1 - lambda) * h_plain, then argmax.
inline std::vector<int> kappa_bagging(const std::vector<std::vector<double>>& h_plain,
                                      const std::vector<std::vector<double>>& h_kernel,
                                      double lambda) {
  if (h_plain.size() != h_kernel.size()) {
    throw InternalError("kappa_bagging: site misalignment, " +
                        std::to_string(h_plain.size()) + " vs " +
                        std::to_string(h_kernel.size()));
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw UsageError("lambda must lie in [0,1], got " + std::to_string(lambda));
  }
  std::vector<int> labels;
  labels.reserve(h_plain.size());
  for (size_t s = 0; s < h_plain.size(); ++s) {
    if (h_plain[s].size() != h_kernel[s].size()) {
      throw InternalError("kappa_bagging: distribution width mismatch at site " +
                          std::to_string(s));
    }
    std::vector<double> mix(h_plain[s].size());
    for (size_t i = 0; i < mix.size(); ++i) {
      mix[i] = lambda * h_kernel[s][i] + (1.0 - lambda) * h_plain[s][i];
    }
    labels.push_back(argmax_label(mix));
  }
  return labels;
}

inline double exact_match(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size()) {
    throw InternalError("exact_match: " + std::to_string(pred.size()) + " vs " +
                        std::to_string(gold.size()) + " sites");
  }
  if (gold.empty()) return 0.0;
  size_t hit = 0;
  for (size_t i = 0; i < gold.size(); ++i) hit += pred[i] == gold[i];
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

struct ClassStats {
  int support = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalReport {
  double em = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassStats> per_class;
  std::vector<std::vector<int>> confusion;  // [gold][pred]
};

// weighted-F1 = sum_i (|C_i|/|C|) * F1_i; a zero-denominator precision,
// recall, or F1 counts as 0.
inline EvalReport evaluate(const std::vector<int>& pred, const std::vector<int>& gold,
                           int num_classes) {
  if (pred.size() != gold.size()) {
    throw InternalError("evaluate: " + std::to_string(pred.size()) + " vs " +
                        std::to_string(gold.size()) + " sites");
  }
  EvalReport r;
  r.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
  for (size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= num_classes || pred[i] < 0 ||
        pred[i] >= num_classes) {
      throw InternalError("evaluate: label out of range at site " +
                          std::to_string(i));
    }
    r.confusion[gold[i]][pred[i]] += 1;
  }
  r.em = exact_match(pred, gold);
  r.per_class.assign(num_classes, ClassStats{});
  const double total = static_cast<double>(gold.size());
  for (int c = 0; c < num_classes; ++c) {
    int tp = r.confusion[c][c];
    int gold_c = 0, pred_c = 0;
    for (int j = 0; j < num_classes; ++j) {
      gold_c += r.confusion[c][j];
      pred_c += r.confusion[j][c];
    }
    ClassStats& s = r.per_class[c];
    s.support = gold_c;
    s.precision = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    s.recall = gold_c > 0 ? static_cast<double>(tp) / gold_c : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    if (total > 0.0) r.weighted_f1 += (gold_c / total) * s.f1;
  }
  return r;
}

// lambda* over the grid by validation exact match; ties pick the smaller
// lambda (grid scanned in ascending order).
inline double select_lambda(const std::vector<std::vector<double>>& h_plain,
                            const std::vector<std::vector<double>>& h_kernel,
                            const std::vector<int>& gold,
                            const std::vector<double>& grid) {
  if (grid.empty()) throw UsageError("lambda grid is empty");
  if (gold.empty()) throw UsageError("lambda selection needs a validation set");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  double best_lambda = sorted.front();
  double best_em = -1.0;
  for (double lam : sorted) {
    double em = exact_match(kappa_bagging(h_plain, h_kernel, lam), gold);
    if (em > best_em) {
      best_em = em;
      best_lambda = lam;
    }
  }
  return best_lambda;
}

inline std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(i / 10.0);
  return g;
}

// ---- Serialization ----

inline nlohmann::json prediction_to_json(const ProgramPrediction& p) {
  nlohmann::json sites = nlohmann::json::array();
  for (const SitePrediction& s : p.sites) {
    sites.push_back({{"pos", s.pos},
                     {"pred", meta_type_name(static_cast<MetaType>(
                                  argmax_label(s.dist)))},
                     {"dist", s.dist}});
  }
  return nlohmann::json{{"id", p.id}, {"sites", sites}};
}

inline void write_predictions(const std::string& path,
                              const std::vector<ProgramPrediction>& preds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions: " + path);
  for (const ProgramPrediction& p : preds) out << prediction_to_json(p).dump() << "\n";
}

inline std::vector<ProgramPrediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read predictions: " + path);
  std::vector<ProgramPrediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("predictions " + path + " line " + std::to_string(lineno) +
                      ": " + e.what());
    }
    ProgramPrediction p;
    p.id = j.at("id").get<int64_t>();
    for (const auto& sj : j.at("sites")) {
      SitePrediction s;
      s.pos = sj.at("pos").get<int>();
      s.dist = sj.at("dist").get<std::vector<double>>();
      p.sites.push_back(std::move(s));
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (size_t c = 0; c < r.per_class.size(); ++c) {
    classes.push_back({{"type", meta_type_name(static_cast<MetaType>(c))},
                       {"support", r.per_class[c].support},
                       {"precision", r.per_class[c].precision},
                       {"recall", r.per_class[c].recall},
                       {"f1", r.per_class[c].f1}});
  }
  return nlohmann::json{{"em", r.em},
                        {"weighted_f1", r.weighted_f1},
                        {"classes", classes},
                        {"confusion", r.confusion}};
}

// Flattens aligned predictions and gold labels into site vectors; programs
// are matched by id and sites by token position.
inline void flatten_sites(const std::vector<ProgramPrediction>& preds,
                          const std::vector<LabeledProgram>& gold,
                          std::vector<std::vector<double>>& dists,
                          std::vector<int>& labels) {
  std::map<int64_t, const LabeledProgram*> by_id;
  for (const LabeledProgram& g : gold) by_id[g.id] = &g;
  for (const ProgramPrediction& p : preds) {
    auto it = by_id.find(p.id);
    if (it == by_id.end()) {
      throw DataError("prediction for unknown program id " + std::to_string(p.id));
    }
    for (const SitePrediction& s : p.sites) {
      auto lit = it->second->labels.find(s.pos);
      if (lit == it->second->labels.end()) {
        throw DataError("prediction at unlabeled position " +
                        std::to_string(s.pos) + " of program " +
                        std::to_string(p.id));
      }
      dists.push_back(s.dist);
      labels.push_back(static_cast<int>(lit->second));
    }
  }
}

}  // namespace crosstype

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crosstype/common.hpp"

namespace crosstype {

// ---------------------------------------------------------------------------
// Abstract programs
// ---------------------------------------------------------------------------

// Dialect-independent expression tree. Operators are abstract ("and"/"or"
// instead of a surface spelling); render() picks the dialect spelling.
struct AbstractExpr {
  enum class Kind { NumLit, StrLit, ListLit, VarRef, Index, Binary, Compare };
  Kind kind;
  std::string text;  // literal text or variable name
  std::string op;    // "+", "and", "or", "==", "!=" for Binary/Compare
  std::string aux;   // index literal for Index, element literal for ListLit
  std::vector<AbstractExpr> operands;
};

struct AbstractStmt {
  enum class Kind { Assign, If, While, Print };
  Kind kind;
  std::string var;  // Assign target / Print argument
  AbstractExpr expr;  // Assign RHS or If/While condition
  std::vector<AbstractStmt> then_body;
  std::vector<AbstractStmt> else_body;
  bool has_else = false;
  int occ_id = -1;  // annotation-site id for Assign occurrences
};

struct AbstractProgram {
  std::string func_name = "f";
  std::optional<std::string> param;
  int param_occ = -1;
  std::vector<AbstractStmt> body;
  std::map<int, MetaType> site_types;  // occ_id -> ground-truth meta-type
};

struct LabeledProgram {
  int64_t id = 0;
  int profile = 0;
  Dialect dialect = Dialect::Alpha;
  std::vector<std::string> tokens;
  std::map<int, MetaType> labels;  // token index -> meta-type

  bool operator==(const LabeledProgram& o) const {
    return id == o.id && profile == o.profile && dialect == o.dialect &&
           tokens == o.tokens && labels == o.labels;
  }
};

// ---------------------------------------------------------------------------
// Label derivation (the deterministic typing rules)
// ---------------------------------------------------------------------------

namespace detail {

// Environment entry: a concrete type, or nullopt when a variable is defined
// but with path-dependent type ("mixed").
using TypeEnv = std::map<std::string, std::optional<MetaType>>;

inline TypeEnv merge_envs(const TypeEnv& a, const TypeEnv& b) {
  TypeEnv out;
  for (const auto& [name, ta] : a) {
    auto it = b.find(name);
    if (it == b.end()) continue;  // not defined on all paths
    if (ta.has_value() && it->second.has_value() && *ta == *it->second) {
      out[name] = ta;
    } else {
      out[name] = std::nullopt;
    }
  }
  return out;
}

inline MetaType derive_expr_type(const AbstractExpr& e, const TypeEnv& env) {
  switch (e.kind) {
    case AbstractExpr::Kind::NumLit: return MetaType::Number;
    case AbstractExpr::Kind::StrLit: return MetaType::String;
    case AbstractExpr::Kind::ListLit: return MetaType::List;
    case AbstractExpr::Kind::Index: return MetaType::Number;  // number lists
    case AbstractExpr::Kind::Compare: return MetaType::Boolean;
    case AbstractExpr::Kind::VarRef: {
      auto it = env.find(e.text);
      if (it == env.end() || !it->second.has_value()) {
        throw InternalError("use of variable '" + e.text +
                            "' with no unambiguous type");
      }
      return *it->second;
    }
    case AbstractExpr::Kind::Binary: {
      if (e.op == "and" || e.op == "or") return MetaType::Boolean;
      return derive_expr_type(e.operands.at(0), env);  // "+" preserves type
    }
  }
  throw InternalError("unreachable expression kind");
}

inline void derive_stmt_types(const std::vector<AbstractStmt>& body, TypeEnv& env,
                              std::map<int, MetaType>& out) {
  for (const AbstractStmt& s : body) {
    switch (s.kind) {
      case AbstractStmt::Kind::Assign: {
        MetaType t = derive_expr_type(s.expr, env);
        out[s.occ_id] = t;
        env[s.var] = t;
        break;
      }
      case AbstractStmt::Kind::Print:
        break;
      case AbstractStmt::Kind::If: {
        derive_expr_type(s.expr, env);
        TypeEnv then_env = env;
        derive_stmt_types(s.then_body, then_env, out);
        TypeEnv else_env = env;
        if (s.has_else) derive_stmt_types(s.else_body, else_env, out);
        env = merge_envs(then_env, else_env);
        break;
      }
      case AbstractStmt::Kind::While: {
        derive_expr_type(s.expr, env);
        TypeEnv body_env = env;
        derive_stmt_types(s.then_body, body_env, out);
        env = merge_envs(body_env, env);
        break;
      }
    }
  }
}

}  // namespace detail

// Re-runs the typing rules over the abstract form. Used by the generator to
// emit labels and by tests to check label soundness.
inline std::map<int, MetaType> derive_labels(const AbstractProgram& p) {
  std::map<int, MetaType> out;
  detail::TypeEnv env;
  if (p.param.has_value()) {
    auto it = p.site_types.find(p.param_occ);
    if (it == p.site_types.end()) throw InternalError("parameter has no site type");
    env[*p.param] = it->second;
    out[p.param_occ] = it->second;
  }
  detail::derive_stmt_types(p.body, env, out);
  return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct RenderError : DataError {
  using DataError::DataError;
};

namespace detail {

struct Surface {
  std::string def_kw, open, close, eq, ne, land, lor;
};

inline Surface surface_of(Dialect d) {
  if (d == Dialect::Alpha) return {"def", ":", "end", "==", "!=", "&", "|"};
  return {"function", "{", "}", "===", "!==", "&&", "||"};
}

inline void render_expr(const AbstractExpr& e, const Surface& s,
                        std::vector<std::string>& out) {
  switch (e.kind) {
    case AbstractExpr::Kind::NumLit:
      out.push_back(e.text);
      break;
    case AbstractExpr::Kind::StrLit:
      out.push_back("\"" + e.text + "\"");
      break;
    case AbstractExpr::Kind::ListLit:
      out.push_back("[");
      out.push_back(e.aux);
      out.push_back("]");
      break;
    case AbstractExpr::Kind::VarRef:
      out.push_back(e.text);
      break;
    case AbstractExpr::Kind::Index:
      out.push_back(e.text);
      out.push_back("[");
      out.push_back(e.aux);
      out.push_back("]");
      break;
    case AbstractExpr::Kind::Binary:
    case AbstractExpr::Kind::Compare: {
      if (e.operands.size() != 2) throw RenderError("binary operator arity");
      render_expr(e.operands[0], s, out);
      if (e.op == "+") out.push_back("+");
      else if (e.op == "and") out.push_back(s.land);
      else if (e.op == "or") out.push_back(s.lor);
      else if (e.op == "==") out.push_back(s.eq);
      else if (e.op == "!=") out.push_back(s.ne);
      else throw RenderError("unsupported abstract operator '" + e.op + "'");
      render_expr(e.operands[1], s, out);
      break;
    }
  }
}

inline void render_stmts(const std::vector<AbstractStmt>& body, const Surface& s,
                         std::vector<std::string>& out,
                         std::map<int, int>& occ_pos) {
  for (const AbstractStmt& st : body) {
    switch (st.kind) {
      case AbstractStmt::Kind::Assign:
        occ_pos[st.occ_id] = static_cast<int>(out.size());
        out.push_back(st.var);
        out.push_back("=");
        render_expr(st.expr, s, out);
        out.push_back(";");
        break;
      case AbstractStmt::Kind::Print:
        out.push_back("print");
        out.push_back("(");
        out.push_back(st.var);
        out.push_back(")");
        out.push_back(";");
        break;
      case AbstractStmt::Kind::If:
        out.push_back("if");
        out.push_back("(");
        render_expr(st.expr, s, out);
        out.push_back(")");
        out.push_back(s.open);
        render_stmts(st.then_body, s, out, occ_pos);
        out.push_back(s.close);
        if (st.has_else) {
          out.push_back("else");
          out.push_back(s.open);
          render_stmts(st.else_body, s, out, occ_pos);
          out.push_back(s.close);
        }
        break;
      case AbstractStmt::Kind::While:
        out.push_back("while");
        out.push_back("(");
        render_expr(st.expr, s, out);
        out.push_back(")");
        out.push_back(s.open);
        render_stmts(st.then_body, s, out, occ_pos);
        out.push_back(s.close);
        break;
    }
  }
}

}  // namespace detail

// Renders the abstract program into a surface token sequence, recording the
// token index of every annotation-site occurrence.
inline std::vector<std::string> render(const AbstractProgram& p, Dialect dialect,
                                       std::map<int, int>* occ_positions = nullptr) {
  detail::Surface s = detail::surface_of(dialect);
  std::vector<std::string> out;
  std::map<int, int> occ_pos;
  out.push_back(s.def_kw);
  out.push_back(p.func_name);
  out.push_back("(");
  if (p.param.has_value()) {
    occ_pos[p.param_occ] = static_cast<int>(out.size());
    out.push_back(*p.param);
  }
  out.push_back(")");
  out.push_back(s.open);
  detail::render_stmts(p.body, s, out, occ_pos);
  out.push_back(s.close);
  if (occ_positions != nullptr) *occ_positions = std::move(occ_pos);
  return out;
}

// ---------------------------------------------------------------------------
// Program generation
// ---------------------------------------------------------------------------

inline constexpr int kNumProfiles = 8;

namespace detail {

// A profile emulates a "project": a fixed statement-frequency mix and type
// preference. Distinct enough that intra/inter splits behave differently.
struct ProfileSpec {
  // weights over {define, reassign, if, while, print}
  std::vector<double> stmt_weights;
  // weights over {Boolean, number, string, list}
  std::vector<double> type_weights;
  double param_prob;
};

inline const ProfileSpec& profile_spec(int profile) {
  static const std::vector<ProfileSpec> specs = {
      {{4.0, 1.0, 1.0, 0.5, 1.0}, {1.0, 1.0, 1.0, 1.0}, 0.6},
      {{3.0, 2.0, 0.5, 1.0, 0.5}, {2.0, 1.0, 0.5, 1.0}, 0.4},
      {{5.0, 0.5, 1.5, 0.5, 1.5}, {0.5, 2.0, 1.0, 1.0}, 0.7},
      {{3.5, 1.5, 1.0, 1.0, 1.0}, {1.0, 0.5, 2.0, 1.0}, 0.5},
      {{4.5, 1.0, 0.5, 1.5, 0.5}, {1.0, 1.0, 0.5, 2.0}, 0.3},
      {{3.0, 1.0, 2.0, 0.5, 1.0}, {1.5, 1.5, 1.0, 0.5}, 0.8},
      {{5.0, 2.0, 0.5, 0.5, 2.0}, {0.5, 1.0, 1.5, 1.5}, 0.5},
      {{3.5, 0.5, 1.5, 1.5, 0.5}, {1.0, 2.0, 2.0, 0.5}, 0.6},
  };
  return specs.at(static_cast<size_t>(profile));
}

class ProgramBuilder {
 public:
  ProgramBuilder(Rng& rng, int profile) : rng_(rng), spec_(profile_spec(profile)) {}

  AbstractProgram build(int min_stmts, int max_stmts) {
    AbstractProgram p;
    if (rng_.chance(spec_.param_prob)) {
      p.param = "p";
      p.param_occ = next_occ_++;
      MetaType pt = pick_type();
      p.site_types[p.param_occ] = pt;
      env_["p"] = pt;
      order_.push_back("p");
      p.body.push_back(revealing_define(pt));
    }
    int n = static_cast<int>(rng_.range(min_stmts, max_stmts));
    for (int i = 0; i < n; ++i) p.body.push_back(gen_stmt(0));
    // Record ground truth by replaying the typing rules.
    AbstractProgram labeled = p;
    std::map<int, MetaType> param_only = p.site_types;
    labeled.site_types = param_only;
    auto derived = derive_labels(labeled);
    labeled.site_types = derived;
    return labeled;
  }

 private:
  MetaType pick_type() {
    return static_cast<MetaType>(rng_.weighted(spec_.type_weights));
  }

  std::string num_lit() { return std::string(1, static_cast<char>('0' + rng_.below(10))); }
  std::string str_lit() { return "s" + std::to_string(rng_.below(10)); }

  std::optional<std::string> var_of_type(MetaType t) {
    std::vector<std::string> candidates;
    for (const auto& name : order_) {
      auto it = env_.find(name);
      if (it != env_.end() && it->second.has_value() && *it->second == t) {
        candidates.push_back(name);
      }
    }
    if (candidates.empty()) return std::nullopt;
    return candidates[rng_.below(candidates.size())];
  }

  std::optional<std::string> any_var() {
    if (order_.empty()) return std::nullopt;
    return order_[rng_.below(order_.size())];
  }

  std::string fresh_var() {
    static const char* pool = "abcdeghijklmnoqrtuvw";  // skips f, p, s
    for (int i = 0; i < 20; ++i) {
      std::string name(1, pool[i]);
      if (env_.find(name) == env_.end()) {
        order_.push_back(name);
        return name;
      }
    }
    // Pool exhausted: reuse an existing variable.
    return order_[rng_.below(order_.size())];
  }

  AbstractExpr num_operand() {
    if (auto v = var_of_type(MetaType::Number); v && rng_.chance(0.5)) {
      return {AbstractExpr::Kind::VarRef, *v, "", "", {}};
    }
    return {AbstractExpr::Kind::NumLit, num_lit(), "", "", {}};
  }

  AbstractExpr str_operand() {
    if (auto v = var_of_type(MetaType::String); v && rng_.chance(0.5)) {
      return {AbstractExpr::Kind::VarRef, *v, "", "", {}};
    }
    return {AbstractExpr::Kind::StrLit, str_lit(), "", "", {}};
  }

  AbstractExpr bool_expr() {
    if (auto v = var_of_type(MetaType::Boolean); v && rng_.chance(0.3)) {
      if (auto w = var_of_type(MetaType::Boolean)) {
        AbstractExpr e{AbstractExpr::Kind::Binary, "", rng_.chance(0.5) ? "and" : "or", "", {}};
        e.operands.push_back({AbstractExpr::Kind::VarRef, *v, "", "", {}});
        e.operands.push_back({AbstractExpr::Kind::VarRef, *w, "", "", {}});
        return e;
      }
    }
    AbstractExpr e{AbstractExpr::Kind::Compare, "", rng_.chance(0.5) ? "==" : "!=", "", {}};
    if (rng_.chance(0.7)) {
      e.operands.push_back(num_operand());
      e.operands.push_back(num_operand());
    } else {
      e.operands.push_back(str_operand());
      e.operands.push_back(str_operand());
    }
    return e;
  }

  AbstractExpr typed_expr(MetaType t) {
    switch (t) {
      case MetaType::Boolean:
        return bool_expr();
      case MetaType::Number: {
        uint64_t c = rng_.below(3);
        if (c == 0) {
          if (auto v = var_of_type(MetaType::List)) {
            return {AbstractExpr::Kind::Index, *v, "", num_lit(), {}};
          }
          c = 1;
        }
        if (c == 1) {
          AbstractExpr e{AbstractExpr::Kind::Binary, "", "+", "", {}};
          e.operands.push_back(num_operand());
          e.operands.push_back(num_operand());
          return e;
        }
        return {AbstractExpr::Kind::NumLit, num_lit(), "", "", {}};
      }
      case MetaType::String: {
        if (rng_.chance(0.5)) {
          AbstractExpr e{AbstractExpr::Kind::Binary, "", "+", "", {}};
          e.operands.push_back(str_operand());
          e.operands.push_back(str_operand());
          return e;
        }
        return {AbstractExpr::Kind::StrLit, str_lit(), "", "", {}};
      }
      case MetaType::List:
        return {AbstractExpr::Kind::ListLit, "", "", num_lit(), {}};
    }
    throw InternalError("unreachable meta-type");
  }

  AbstractStmt revealing_define(MetaType param_type) {
    AbstractStmt s{AbstractStmt::Kind::Assign, fresh_var(), {}, {}, {}, false, next_occ_++};
    AbstractExpr pref{AbstractExpr::Kind::VarRef, "p", "", "", {}};
    MetaType t;
    switch (param_type) {
      case MetaType::Number: {
        AbstractExpr e{AbstractExpr::Kind::Binary, "", "+", "", {pref, {AbstractExpr::Kind::NumLit, num_lit(), "", "", {}}}};
        s.expr = e;
        t = MetaType::Number;
        break;
      }
      case MetaType::String: {
        AbstractExpr e{AbstractExpr::Kind::Binary, "", "+", "", {pref, {AbstractExpr::Kind::StrLit, str_lit(), "", "", {}}}};
        s.expr = e;
        t = MetaType::String;
        break;
      }
      case MetaType::Boolean: {
        AbstractExpr e{AbstractExpr::Kind::Binary, "", "and", "", {pref, pref}};
        s.expr = e;
        t = MetaType::Boolean;
        break;
      }
      case MetaType::List: {
        s.expr = {AbstractExpr::Kind::Index, "p", "", num_lit(), {}};
        t = MetaType::Number;
        break;
      }
      default:
        throw InternalError("unreachable");
    }
    env_[s.var] = t;
    return s;
  }

  AbstractStmt gen_stmt(int depth) {
    std::vector<double> w = spec_.stmt_weights;
    if (depth >= 2) {
      w[2] = 0.0;  // no nested if
      w[3] = 0.0;  // no nested while
    }
    if (order_.empty()) {
      w[1] = 0.0;  // nothing to reassign
      w[4] = 0.0;  // nothing to print
    }
    switch (rng_.weighted(w)) {
      case 0: {  // define
        MetaType t = pick_type();
        AbstractExpr e = typed_expr(t);
        AbstractStmt s{AbstractStmt::Kind::Assign, "", e, {}, {}, false, next_occ_++};
        s.var = fresh_var();
        env_[s.var] = derive_expr_type(e, env_);
        return s;
      }
      case 1: {  // reassign, possibly changing type
        std::string v = *any_var();
        MetaType t = pick_type();
        AbstractExpr e = typed_expr(t);
        AbstractStmt s{AbstractStmt::Kind::Assign, v, e, {}, {}, false, next_occ_++};
        env_[v] = derive_expr_type(e, env_);
        return s;
      }
      case 2: {  // if / if-else
        AbstractStmt s{AbstractStmt::Kind::If, "", bool_expr(), {}, {}, false, -1};
        TypeEnv pre = env_;
        auto pre_order = order_;
        int nt = static_cast<int>(rng_.range(1, 3));
        for (int i = 0; i < nt; ++i) s.then_body.push_back(gen_stmt(depth + 1));
        TypeEnv then_env = env_;
        env_ = pre;
        order_ = pre_order;
        s.has_else = rng_.chance(0.6);
        if (s.has_else) {
          int ne = static_cast<int>(rng_.range(1, 3));
          for (int i = 0; i < ne; ++i) s.else_body.push_back(gen_stmt(depth + 1));
        }
        TypeEnv else_env = env_;
        env_ = merge_envs(then_env, else_env);
        order_ = pre_order;
        prune_order();
        return s;
      }
      case 3: {  // while
        AbstractStmt s{AbstractStmt::Kind::While, "", bool_expr(), {}, {}, false, -1};
        TypeEnv pre = env_;
        auto pre_order = order_;
        int nb = static_cast<int>(rng_.range(1, 3));
        for (int i = 0; i < nb; ++i) s.then_body.push_back(gen_stmt(depth + 1));
        TypeEnv body_env = env_;
        env_ = merge_envs(body_env, pre);
        order_ = pre_order;
        prune_order();
        return s;
      }
      default: {  // print
        return {AbstractStmt::Kind::Print, *any_var(), {}, {}, {}, false, -1};
      }
    }
  }

  // Drop names from the usable order that fell out of the env.
  void prune_order() {
    std::vector<std::string> kept;
    for (const auto& n : order_) {
      if (env_.find(n) != env_.end()) kept.push_back(n);
    }
    order_ = kept;
  }

  Rng& rng_;
  const ProfileSpec& spec_;
  TypeEnv env_;
  std::vector<std::string> order_;  // insertion order, deterministic choice
  int next_occ_ = 0;
};

}  // namespace detail

// Deterministic abstract-program generation; the dialect affects rendering
// only, so a seed produces the same abstract form in both dialects.
inline AbstractProgram generate_abstract(uint64_t seed, int min_stmts, int max_stmts,
                                         int profile) {
  if (min_stmts > max_stmts || min_stmts < 0) {
    throw UsageError("empty statement-count range");
  }
  Rng rng(derive_seed(seed, 0x5eedULL));
  return detail::ProgramBuilder(rng, profile).build(min_stmts, max_stmts);
}

inline LabeledProgram generate_program(uint64_t seed, Dialect dialect, int min_stmts,
                                       int max_stmts) {
  int profile = static_cast<int>(seed % kNumProfiles);
  AbstractProgram p = generate_abstract(seed, min_stmts, max_stmts, profile);
  LabeledProgram out;
  out.profile = profile;
  out.dialect = dialect;
  std::map<int, int> occ_pos;
  out.tokens = render(p, dialect, &occ_pos);
  for (const auto& [occ, type] : p.site_types) {
    out.labels[occ_pos.at(occ)] = type;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitMode { Intra, Inter };

struct DatasetManifest {
  SplitMode mode = SplitMode::Intra;
  std::map<int64_t, int> split_of;  // program id -> 0 train / 1 val / 2 test
  std::vector<std::string> label_vocabulary;
  std::array<int, 3> counts = {0, 0, 0};

  bool operator==(const DatasetManifest& o) const {
    return mode == o.mode && split_of == o.split_of && counts == o.counts;
  }
};

namespace detail {

inline std::array<int, 3> largest_remainder_counts(int n, const std::array<double, 3>& r) {
  std::array<int, 3> counts;
  std::array<double, 3> rem;
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = r[i] * n;
    counts[i] = static_cast<int>(exact);
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (rem[i] > rem[best]) best = i;
    }
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return counts;
}

}  // namespace detail

inline DatasetManifest split_dataset(const std::vector<LabeledProgram>& programs,
                                     const std::array<double, 3>& ratios,
                                     SplitMode mode, uint64_t seed) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) throw UsageError("split ratios must sum to 1");
  DatasetManifest m;
  m.mode = mode;
  for (int i = 0; i < kNumMetaTypes; ++i) {
    m.label_vocabulary.push_back(meta_type_name(static_cast<MetaType>(i)));
  }
  const int n = static_cast<int>(programs.size());
  auto targets = detail::largest_remainder_counts(n, ratios);
  Rng rng(derive_seed(seed, 0x5117ULL));
  if (mode == SplitMode::Intra) {
    std::vector<int64_t> ids;
    ids.reserve(programs.size());
    for (const auto& p : programs) ids.push_back(p.id);
    rng.shuffle(ids);
    int cursor = 0;
    for (int split = 0; split < 3; ++split) {
      for (int k = 0; k < targets[split]; ++k) m.split_of[ids[cursor++]] = split;
    }
  } else {
    std::map<int, std::vector<int64_t>> by_profile;
    for (const auto& p : programs) by_profile[p.profile].push_back(p.id);
    if (by_profile.size() < 3) {
      throw UsageError("inter-mode split needs at least 3 profiles, got " +
                       std::to_string(by_profile.size()));
    }
    std::vector<int> profiles;
    for (const auto& [pid, ids] : by_profile) profiles.push_back(pid);
    rng.shuffle(profiles);
    std::array<int, 3> assigned = {0, 0, 0};
    for (int pid : profiles) {
      // Assign whole profiles to the split with the largest deficit.
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (targets[s] - assigned[s] > targets[best] - assigned[best]) best = s;
      }
      for (int64_t id : by_profile[pid]) m.split_of[id] = best;
      assigned[best] += static_cast<int>(by_profile[pid].size());
    }
  }
  for (const auto& [id, split] : m.split_of) ++m.counts[split];
  return m;
}

// ---------------------------------------------------------------------------
// JSON Lines serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const LabeledProgram& p) {
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [pos, type] : p.labels) {
    labels[std::to_string(pos)] = meta_type_name(type);
  }
  return nlohmann::json{{"id", p.id},
                        {"profile", p.profile},
                        {"dialect", dialect_name(p.dialect)},
                        {"tokens", p.tokens},
                        {"labels", labels}};
}

inline LabeledProgram program_from_json(const nlohmann::json& j, int line_no) {
  auto need = [&](const char* field) -> const nlohmann::json& {
    auto it = j.find(field);
    if (it == j.end()) {
      throw DataError("line " + std::to_string(line_no) + ": missing field '" +
                      field + "'");
    }
    return *it;
  };
  LabeledProgram p;
  try {
    p.id = need("id").get<int64_t>();
    p.profile = need("profile").get<int>();
    p.dialect = dialect_from_name(need("dialect").get<std::string>());
    p.tokens = need("tokens").get<std::vector<std::string>>();
    for (const auto& [key, val] : need("labels").items()) {
      int pos = std::stoi(key);
      if (pos < 0 || pos >= static_cast<int>(p.tokens.size())) {
        throw DataError("line " + std::to_string(line_no) +
                        ": label position out of range in field 'labels'");
      }
      p.labels[pos] = meta_type_from_name(val.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("line " + std::to_string(line_no) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError("line " + std::to_string(line_no) + ": " + e.what());
  }
  return p;
}

inline void write_dataset(const std::string& path,
                          const std::vector<LabeledProgram>& programs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const auto& p : programs) {
    out << to_json(p).dump() << "\n";
  }
}

inline std::vector<LabeledProgram> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path);
  std::vector<LabeledProgram> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError("line " + std::to_string(line_no) + ": malformed JSON");
    }
    out.push_back(program_from_json(j, line_no));
  }
  return out;
}

// Joins tokens back into dialect source text for the frontend.
inline std::string to_source(const LabeledProgram& p) {
  std::string src;
  for (size_t i = 0; i < p.tokens.size(); ++i) {
    if (i > 0) src += " ";
    src += p.tokens[i];
  }
  return src;
}

}  // namespace crosstype

#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crosstype/common.hpp"
#include "crosstype/frontend.hpp"

namespace crosstype {

// ---------------------------------------------------------------------------
// Control flow graph
// ---------------------------------------------------------------------------

struct CfgStatement {
  int ast_node = -1;              // AssignStmt / PrintStmt / condition expr / param
  bool is_definition = false;
  std::string def_var;            // set iff is_definition
  int def_terminal = -1;          // LHS terminal node id, iff is_definition
  std::vector<int> terminals;     // all terminal node ids in the statement
  // (terminal node id, variable name) for every variable read
  std::vector<std::pair<int, std::string>> uses;
};

struct Cfg {
  std::vector<CfgStatement> statements;
  std::vector<std::vector<int>> block_stmts;  // block id -> ordered stmt ids
  std::vector<std::vector<int>> succ;         // block id -> successor block ids
  int entry = 0;

  int num_blocks() const { return static_cast<int>(block_stmts.size()); }
  int num_edges() const {
    int e = 0;
    for (const auto& s : succ) e += static_cast<int>(s.size());
    return e;
  }
};

namespace detail {

inline void collect_terminals(const Ast& ast, int node, std::vector<int>& out) {
  const AstNode& n = ast.nodes[node];
  if (n.kind == NodeKind::Terminal) {
    out.push_back(node);
    return;
  }
  for (int c : n.children) collect_terminals(ast, c, out);
}

// Variable reads inside an expression subtree: identifier terminals that are
// not an assignment LHS (the caller never passes the LHS here).
inline void collect_uses(const Ast& ast, int node,
                         std::vector<std::pair<int, std::string>>& out) {
  const AstNode& n = ast.nodes[node];
  if (n.kind == NodeKind::Terminal) {
    if (n.token->kind == TokenKind::Identifier) out.emplace_back(node, n.token->text);
    return;
  }
  for (int c : n.children) collect_uses(ast, c, out);
}

class CfgBuilder {
 public:
  explicit CfgBuilder(const Ast& ast) : ast_(ast) {}

  Cfg build() {
    int entry = new_block();
    cfg_.entry = entry;
    int fn = find_funcdef();
    int param = find_param(fn);
    if (param >= 0) {
      CfgStatement s;
      s.ast_node = param;
      s.is_definition = true;
      s.def_var = ast_.nodes[param].token->text;
      s.def_terminal = param;
      s.terminals = {param};
      append_stmt(entry, std::move(s));
    }
    int body = find_body_block(fn);
    build_seq(body, entry);
    return std::move(cfg_);
  }

 private:
  int new_block() {
    cfg_.block_stmts.emplace_back();
    cfg_.succ.emplace_back();
    return static_cast<int>(cfg_.block_stmts.size()) - 1;
  }

  void edge(int from, int to) { cfg_.succ[from].push_back(to); }

  void append_stmt(int block, CfgStatement s) {
    cfg_.statements.push_back(std::move(s));
    cfg_.block_stmts[block].push_back(static_cast<int>(cfg_.statements.size()) - 1);
  }

  int find_funcdef() const {
    for (int c : ast_.nodes[ast_.root].children) {
      if (ast_.nodes[c].kind == NodeKind::FuncDef) return c;
    }
    throw InternalError("program has no function definition");
  }

  // The optional parameter is the identifier terminal between '(' and ')'.
  int find_param(int fn) const {
    const auto& kids = ast_.nodes[fn].children;
    for (size_t i = 0; i + 1 < kids.size(); ++i) {
      const AstNode& n = ast_.nodes[kids[i]];
      if (n.kind == NodeKind::Terminal && n.token->text == "(") {
        const AstNode& next = ast_.nodes[kids[i + 1]];
        if (next.kind == NodeKind::Terminal &&
            next.token->kind == TokenKind::Identifier) {
          return kids[i + 1];
        }
        return -1;
      }
    }
    return -1;
  }

  int find_body_block(int fn) const {
    for (int c : ast_.nodes[fn].children) {
      if (ast_.nodes[c].kind == NodeKind::Block) return c;
    }
    throw InternalError("function has no body block");
  }

  // Condition expression: child after the '(' terminal of an If/While node.
  int condition_child(int stmt_node) const {
    const auto& kids = ast_.nodes[stmt_node].children;
    for (size_t i = 0; i + 1 < kids.size(); ++i) {
      const AstNode& n = ast_.nodes[kids[i]];
      if (n.kind == NodeKind::Terminal && n.token->text == "(") {
        return kids[i + 1];
      }
    }
    throw InternalError("branch statement has no condition");
  }

  CfgStatement make_condition_stmt(int stmt_node) {
    int cond = condition_child(stmt_node);
    CfgStatement s;
    s.ast_node = cond;
    collect_terminals(ast_, cond, s.terminals);
    collect_uses(ast_, cond, s.uses);
    return s;
  }

  // Blocks of an If node in child order (then first, optional else second).
  std::vector<int> branch_blocks(int stmt_node) const {
    std::vector<int> out;
    for (int c : ast_.nodes[stmt_node].children) {
      if (ast_.nodes[c].kind == NodeKind::Block) out.push_back(c);
    }
    return out;
  }

  // Lowers one AST block starting in `current`; returns the block control
  // falls out of.
  int build_seq(int ast_block, int current) {
    for (int child : ast_.nodes[ast_block].children) {
      const AstNode& n = ast_.nodes[child];
      switch (n.kind) {
        case NodeKind::AssignStmt: {
          CfgStatement s;
          s.ast_node = child;
          s.is_definition = true;
          int lhs = n.children.front();
          s.def_var = ast_.nodes[lhs].token->text;
          s.def_terminal = lhs;
          collect_terminals(ast_, child, s.terminals);
          // Reads: everything after the '=' terminal.
          bool after_eq = false;
          for (int c : n.children) {
            const AstNode& cn = ast_.nodes[c];
            if (!after_eq) {
              if (cn.kind == NodeKind::Terminal && cn.token->text == "=") after_eq = true;
              continue;
            }
            collect_uses(ast_, c, s.uses);
          }
          append_stmt(current, std::move(s));
          break;
        }
        case NodeKind::PrintStmt: {
          CfgStatement s;
          s.ast_node = child;
          collect_terminals(ast_, child, s.terminals);
          for (int c : n.children) {
            const AstNode& cn = ast_.nodes[c];
            if (cn.kind == NodeKind::Terminal &&
                cn.token->kind == TokenKind::Identifier) {
              s.uses.emplace_back(c, cn.token->text);
            }
          }
          append_stmt(current, std::move(s));
          break;
        }
        case NodeKind::IfStmt: {
          append_stmt(current, make_condition_stmt(child));
          auto blocks = branch_blocks(child);
          int join = -1;
          int then_b = new_block();
          edge(current, then_b);
          int then_exit = build_seq(blocks.at(0), then_b);
          if (blocks.size() > 1) {
            int else_b = new_block();
            edge(current, else_b);
            int else_exit = build_seq(blocks.at(1), else_b);
            join = new_block();
            edge(then_exit, join);
            edge(else_exit, join);
          } else {
            join = new_block();
            edge(current, join);
            edge(then_exit, join);
          }
          current = join;
          break;
        }
        case NodeKind::WhileStmt: {
          int cond_b = new_block();
          edge(current, cond_b);
          append_stmt(cond_b, make_condition_stmt(child));
          int body_b = new_block();
          edge(cond_b, body_b);
          int body_exit = build_seq(branch_blocks(child).at(0), body_b);
          edge(body_exit, cond_b);  // back edge
          int after = new_block();
          edge(cond_b, after);
          current = after;
          break;
        }
        default:
          break;  // terminals of the enclosing block
      }
    }
    return current;
  }

  const Ast& ast_;
  Cfg cfg_;
};

}  // namespace detail

inline Cfg build_cfg(const Ast& ast) { return detail::CfgBuilder(ast).build(); }

// ---------------------------------------------------------------------------
// Reaching definitions
// ---------------------------------------------------------------------------

// Per use-site terminal: the set of definition-statement ids reaching it.
using ReachingDefs = std::map<int, std::set<int>>;

namespace detail {

inline std::vector<int> reverse_post_order(const Cfg& cfg) {
  std::vector<int> order;
  std::vector<char> seen(cfg.num_blocks(), 0);
  // Iterative DFS with explicit post-order.
  std::vector<std::pair<int, size_t>> stack;
  stack.emplace_back(cfg.entry, 0);
  seen[cfg.entry] = 1;
  while (!stack.empty()) {
    auto& [b, i] = stack.back();
    if (i < cfg.succ[b].size()) {
      int next = cfg.succ[b][i++];
      if (!seen[next]) {
        seen[next] = 1;
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(b);
      stack.pop_back();
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace detail

inline ReachingDefs reaching_definitions(const Cfg& cfg) {
  const int nb = cfg.num_blocks();
  const int ns = static_cast<int>(cfg.statements.size());
  // kill[s] = all other definitions of the same variable
  std::map<std::string, std::vector<int>> defs_of_var;
  for (int s = 0; s < ns; ++s) {
    if (cfg.statements[s].is_definition) {
      defs_of_var[cfg.statements[s].def_var].push_back(s);
    }
  }
  std::vector<std::set<int>> in(nb), out(nb);
  auto transfer = [&](int stmt, std::set<int>& live) {
    const CfgStatement& s = cfg.statements[stmt];
    if (!s.is_definition) return;
    for (int other : defs_of_var[s.def_var]) live.erase(other);
    live.insert(stmt);
  };
  std::vector<int> rpo = detail::reverse_post_order(cfg);
  std::vector<std::vector<int>> preds(nb);
  for (int b = 0; b < nb; ++b) {
    for (int t : cfg.succ[b]) preds[t].push_back(b);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (int b : rpo) {
      std::set<int> new_in;
      for (int p : preds[b]) new_in.insert(out[p].begin(), out[p].end());
      std::set<int> new_out = new_in;
      for (int stmt : cfg.block_stmts[b]) transfer(stmt, new_out);
      if (new_in != in[b] || new_out != out[b]) {
        in[b] = std::move(new_in);
        out[b] = std::move(new_out);
        changed = true;
      }
    }
  }
  // Per-use sets: IN(block) plus transfers of earlier statements in the
  // block. A definition never reaches the reads of its own statement.
  ReachingDefs result;
  for (int b = 0; b < nb; ++b) {
    std::set<int> live = in[b];
    for (int stmt : cfg.block_stmts[b]) {
      for (const auto& [terminal, var] : cfg.statements[stmt].uses) {
        std::set<int>& sink = result[terminal];
        auto it = defs_of_var.find(var);
        if (it != defs_of_var.end()) {
          for (int d : it->second) {
            if (live.count(d)) sink.insert(d);
          }
        }
      }
      transfer(stmt, live);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Type-closeness graph and distances
// ---------------------------------------------------------------------------

struct Tcg {
  const Ast* ast = nullptr;
  // Directed edges use-terminal -> definition-statement terminal, keyed by
  // token positions.
  std::set<std::pair<int, int>> rda_edges;  // (use token idx, def token idx)
};

// RDA edges connect a use to the terminals of each reaching definition
// statement, excluding the statement's own defined-variable terminal (the
// worked example pins d_RDA(use, def-var) = INF).
inline Tcg build_tcg(const Ast& ast, const Cfg& cfg, const ReachingDefs& rd) {
  Tcg tcg;
  tcg.ast = &ast;
  for (const auto& [use_terminal, def_stmts] : rd) {
    int use_tok = ast.nodes[use_terminal].token->index;
    for (int d : def_stmts) {
      const CfgStatement& s = cfg.statements[d];
      for (int t : s.terminals) {
        if (t == s.def_terminal) continue;
        tcg.rda_edges.emplace(use_tok, ast.nodes[t].token->index);
      }
    }
  }
  return tcg;
}

// Hops from v_i up to LCA(v_i, v_j) along AST edges. Asymmetric.
inline int d_lca(const Ast& ast, int node_i, int node_j) {
  if (node_i < 0 || node_j < 0 || node_i >= static_cast<int>(ast.nodes.size()) ||
      node_j >= static_cast<int>(ast.nodes.size())) {
    throw InternalError("d_lca: node outside tree");
  }
  int di = ast.depth(node_i);
  int dj = ast.depth(node_j);
  int a = node_i, b = node_j;
  int hops = 0;
  while (di > dj) {
    a = ast.nodes[a].parent;
    --di;
    ++hops;
  }
  while (dj > di) {
    b = ast.nodes[b].parent;
    --dj;
  }
  while (a != b) {
    a = ast.nodes[a].parent;
    b = ast.nodes[b].parent;
    ++hops;
  }
  return hops;
}

inline int32_t d_rda(const Tcg& tcg, int tok_i, int tok_j) {
  return tcg.rda_edges.count({tok_i, tok_j}) ? 1 : kInfDistance;
}

struct VtcMatrix {
  int n = 0;
  std::vector<int32_t> data;  // row-major

  int32_t at(int i, int j) const { return data[static_cast<size_t>(i) * n + j]; }
  int32_t& at(int i, int j) { return data[static_cast<size_t>(i) * n + j]; }
};

inline VtcMatrix vtc_matrix(const Tcg& tcg) {
  const Ast& ast = *tcg.ast;
  const int n = ast.num_terminals();
  VtcMatrix m;
  m.n = n;
  m.data.assign(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    int node_i = ast.terminal_node_of_token[i];
    for (int j = 0; j < n; ++j) {
      int node_j = ast.terminal_node_of_token[j];
      int lca = d_lca(ast, node_i, node_j);
      int32_t rda = d_rda(tcg, i, j);
      m.at(i, j) = std::min<int32_t>(lca, rda);
    }
  }
  return m;
}

struct ProgramAnalysis {
  Ast ast;
  Cfg cfg;
  ReachingDefs reaching;
  Tcg tcg;
  VtcMatrix vtc;
};

inline ProgramAnalysis analyze_tokens(const std::vector<std::string>& tokens,
                                      Dialect dialect) {
  std::string src;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) src += " ";
    src += tokens[i];
  }
  ProgramAnalysis a;
  a.ast = parse(tokenize(src, dialect), dialect);
  a.cfg = build_cfg(a.ast);
  a.reaching = reaching_definitions(a.cfg);
  a.tcg = build_tcg(a.ast, a.cfg, a.reaching);
  a.vtc = vtc_matrix(a.tcg);
  return a;
}

// Sidecar JSON: {"n": int, "vtc": [[int|"inf",...]], "rda_edges": [[u,d],...]}
inline nlohmann::json vtc_to_json(const ProgramAnalysis& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < a.vtc.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < a.vtc.n; ++j) {
      int32_t v = a.vtc.at(i, j);
      if (v == kInfDistance) {
        row.push_back("inf");
      } else {
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [u, d] : a.tcg.rda_edges) {
    edges.push_back(nlohmann::json::array({u, d}));
  }
  return nlohmann::json{{"n", a.vtc.n}, {"vtc", rows}, {"rda_edges", edges}};
}

}  // namespace crosstype

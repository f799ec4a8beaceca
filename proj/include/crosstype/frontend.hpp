#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crosstype/common.hpp"

namespace crosstype {

enum class TokenKind {
  Keyword,
  Identifier,
  NumberLiteral,
  StringLiteral,
  Operator,
  Punct,
};

struct Token {
  std::string text;
  TokenKind kind;
  int index = 0;  // position in the sequence
};

struct LexError : DataError {
  LexError(const std::string& msg, size_t offset)
      : DataError(msg + " at offset " + std::to_string(offset)),
        offset(offset) {}
  size_t offset;
};

struct SyntaxError : DataError {
  SyntaxError(const std::string& expected, int position)
      : DataError("syntax error at token " + std::to_string(position) +
                  ": expected " + expected),
        expected(expected),
        position(position) {}
  std::string expected;
  int position;
};

namespace detail {

inline bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
inline bool is_ident_continue(unsigned char c) { return std::isalnum(c) || c == '_'; }

inline const std::vector<std::string>& operator_table(Dialect d) {
  // Longest-first for maximal munch.
  static const std::vector<std::string> alpha = {"==", "!=", "=", "&", "|", "+"};
  static const std::vector<std::string> beta = {"===", "!==", "=", "&&", "||", "+"};
  return d == Dialect::Alpha ? alpha : beta;
}

inline bool is_keyword(const std::string& s, Dialect d) {
  if (s == "if" || s == "else" || s == "while" || s == "print") return true;
  if (d == Dialect::Alpha) return s == "def" || s == "end";
  return s == "function";
}

inline bool is_punct_char(char c, Dialect d) {
  if (c == '(' || c == ')' || c == '[' || c == ']' || c == ';') return true;
  if (d == Dialect::Alpha) return c == ':';
  return c == '{' || c == '}';
}

}  // namespace detail

// Maximal-munch lexer. Every non-whitespace character belongs to exactly
// one token; unknown characters abort with their byte offset.
inline std::vector<Token> tokenize(const std::string& source, Dialect dialect) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = source.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(source[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    Token tok;
    tok.index = static_cast<int>(out.size());
    if (detail::is_ident_start(c)) {
      size_t j = i;
      while (j < n && detail::is_ident_continue(static_cast<unsigned char>(source[j]))) ++j;
      tok.text = source.substr(i, j - i);
      tok.kind = detail::is_keyword(tok.text, dialect) ? TokenKind::Keyword
                                                       : TokenKind::Identifier;
      i = j;
    } else if (std::isdigit(c)) {
      size_t j = i;
      while (j < n && std::isdigit(static_cast<unsigned char>(source[j]))) ++j;
      if (j < n && source[j] == '.') {
        ++j;
        while (j < n && std::isdigit(static_cast<unsigned char>(source[j]))) ++j;
      }
      tok.text = source.substr(i, j - i);
      tok.kind = TokenKind::NumberLiteral;
      i = j;
    } else if (c == '"') {
      size_t j = i + 1;
      while (j < n && source[j] != '"') ++j;
      if (j >= n) throw LexError("unterminated string literal", i);
      tok.text = source.substr(i, j - i + 1);
      tok.kind = TokenKind::StringLiteral;
      i = j + 1;
    } else if (detail::is_punct_char(source[i], dialect)) {
      tok.text = std::string(1, source[i]);
      tok.kind = TokenKind::Punct;
      ++i;
    } else {
      bool matched = false;
      for (const auto& op : detail::operator_table(dialect)) {
        if (source.compare(i, op.size(), op) == 0) {
          tok.text = op;
          tok.kind = TokenKind::Operator;
          i += op.size();
          matched = true;
          break;
        }
      }
      if (!matched) throw LexError("unknown character '" + std::string(1, source[i]) + "'", i);
    }
    out.push_back(std::move(tok));
  }
  return out;
}

// Dialect-neutral production labels shared by both parsers so downstream
// code (and the transfer setting) operates over one non-terminal
// vocabulary.
enum class NodeKind {
  Terminal,
  Program,
  FuncDef,
  Block,
  AssignStmt,
  IfStmt,
  WhileStmt,
  PrintStmt,
  CmpExpr,
  BinExpr,
  IndexExpr,
  ListLit,
};

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Terminal: return "terminal";
    case NodeKind::Program: return "program";
    case NodeKind::FuncDef: return "func-def";
    case NodeKind::Block: return "block";
    case NodeKind::AssignStmt: return "assign-stmt";
    case NodeKind::IfStmt: return "if-stmt";
    case NodeKind::WhileStmt: return "while-stmt";
    case NodeKind::PrintStmt: return "print-stmt";
    case NodeKind::CmpExpr: return "cmp-expr";
    case NodeKind::BinExpr: return "bin-expr";
    case NodeKind::IndexExpr: return "index-expr";
    case NodeKind::ListLit: return "list-lit";
  }
  return "?";
}

struct AstNode {
  NodeKind kind;
  int parent = -1;
  std::vector<int> children;
  std::optional<Token> token;  // set iff kind == Terminal
};

struct Ast {
  std::vector<AstNode> nodes;
  int root = -1;
  std::vector<int> terminal_node_of_token;  // token index -> node id
  Dialect dialect = Dialect::Alpha;

  int num_terminals() const { return static_cast<int>(terminal_node_of_token.size()); }

  bool is_terminal(int node) const { return nodes[node].kind == NodeKind::Terminal; }

  int depth(int node) const {
    int d = 0;
    while (nodes[node].parent >= 0) {
      node = nodes[node].parent;
      ++d;
    }
    return d;
  }
};

namespace detail {

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, Dialect dialect)
      : tokens_(tokens), dialect_(dialect) {
    ast_.dialect = dialect;
    ast_.terminal_node_of_token.assign(tokens.size(), -1);
  }

  Ast parse() {
    int program = make_node(NodeKind::Program, -1);
    ast_.root = program;
    parse_funcdef(program);
    if (pos_ != tokens_.size()) throw SyntaxError("end of input", static_cast<int>(pos_));
    return std::move(ast_);
  }

 private:
  std::string open_spelling() const { return dialect_ == Dialect::Alpha ? ":" : "{"; }
  std::string close_spelling() const { return dialect_ == Dialect::Alpha ? "end" : "}"; }
  std::string def_spelling() const { return dialect_ == Dialect::Alpha ? "def" : "function"; }
  std::string eq_spelling() const { return dialect_ == Dialect::Alpha ? "==" : "==="; }
  std::string ne_spelling() const { return dialect_ == Dialect::Alpha ? "!=" : "!=="; }
  std::string and_spelling() const { return dialect_ == Dialect::Alpha ? "&" : "&&"; }
  std::string or_spelling() const { return dialect_ == Dialect::Alpha ? "|" : "||"; }

  int make_node(NodeKind kind, int parent) {
    ast_.nodes.push_back(AstNode{kind, parent, {}, std::nullopt});
    int id = static_cast<int>(ast_.nodes.size()) - 1;
    if (parent >= 0) ast_.nodes[parent].children.push_back(id);
    return id;
  }

  const Token* peek(size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? &tokens_[pos_ + ahead] : nullptr;
  }

  bool at(const std::string& text) const {
    const Token* t = peek();
    return t != nullptr && t->text == text;
  }

  bool at_kind(TokenKind k) const {
    const Token* t = peek();
    return t != nullptr && t->kind == k;
  }

  int consume_terminal(int parent) {
    if (pos_ >= tokens_.size()) throw SyntaxError("a token", static_cast<int>(pos_));
    int node = make_node(NodeKind::Terminal, parent);
    ast_.nodes[node].token = tokens_[pos_];
    ast_.terminal_node_of_token[pos_] = node;
    ++pos_;
    return node;
  }

  void expect(const std::string& text, int parent) {
    if (!at(text)) throw SyntaxError("'" + text + "'", static_cast<int>(pos_));
    consume_terminal(parent);
  }

  void expect_kind(TokenKind k, const std::string& what, int parent) {
    if (!at_kind(k)) throw SyntaxError(what, static_cast<int>(pos_));
    consume_terminal(parent);
  }

  void parse_funcdef(int parent) {
    int fn = make_node(NodeKind::FuncDef, parent);
    expect(def_spelling(), fn);
    expect_kind(TokenKind::Identifier, "function name", fn);
    expect("(", fn);
    if (at_kind(TokenKind::Identifier)) consume_terminal(fn);  // single parameter
    expect(")", fn);
    expect(open_spelling(), fn);
    parse_block(fn);
    expect(close_spelling(), fn);
  }

  void parse_block(int parent) {
    int block = make_node(NodeKind::Block, parent);
    while (peek() != nullptr && !at(close_spelling()) && !at("else")) {
      parse_stmt(block);
    }
  }

  void parse_stmt(int parent) {
    if (at("if")) {
      parse_if(parent);
    } else if (at("while")) {
      parse_while(parent);
    } else if (at("print")) {
      int stmt = make_node(NodeKind::PrintStmt, parent);
      expect("print", stmt);
      expect("(", stmt);
      expect_kind(TokenKind::Identifier, "identifier", stmt);
      expect(")", stmt);
      expect(";", stmt);
    } else if (at_kind(TokenKind::Identifier)) {
      int stmt = make_node(NodeKind::AssignStmt, parent);
      consume_terminal(stmt);
      expect("=", stmt);
      parse_expr(stmt);
      expect(";", stmt);
    } else {
      throw SyntaxError("a statement", static_cast<int>(pos_));
    }
  }

  void parse_if(int parent) {
    int stmt = make_node(NodeKind::IfStmt, parent);
    expect("if", stmt);
    expect("(", stmt);
    parse_expr(stmt);
    expect(")", stmt);
    expect(open_spelling(), stmt);
    parse_block(stmt);
    expect(close_spelling(), stmt);
    if (at("else")) {
      expect("else", stmt);
      expect(open_spelling(), stmt);
      parse_block(stmt);
      expect(close_spelling(), stmt);
    }
  }

  void parse_while(int parent) {
    int stmt = make_node(NodeKind::WhileStmt, parent);
    expect("while", stmt);
    expect("(", stmt);
    parse_expr(stmt);
    expect(")", stmt);
    expect(open_spelling(), stmt);
    parse_block(stmt);
    expect(close_spelling(), stmt);
  }

  // Two precedence levels: comparison over binary (+, and, or).
  // Expression nodes are attached to `parent` lazily so single-token
  // expressions stay flat (terminals hang directly off the statement).
  void parse_expr(int parent) { parse_cmp(parent); }

  void parse_cmp(int parent) {
    if (peeks_cmp_after_bin()) {
      int node = make_node(NodeKind::CmpExpr, parent);
      parse_bin(node);
      if (at(eq_spelling()) || at(ne_spelling())) {
        consume_terminal(node);
        parse_bin(node);
      }
    } else {
      parse_bin(parent);
    }
  }

  bool at(const std::string& text, size_t ahead) const {
    const Token* t = peek(ahead);
    return t != nullptr && t->text == text;
  }

  // Lookahead: does a comparison operator follow the next bin-expr?
  bool peeks_cmp_after_bin() const {
    size_t p = pos_;
    // skim one operand
    auto skim_atom = [&]() -> bool {
      const Token* t = p < tokens_.size() ? &tokens_[p] : nullptr;
      if (t == nullptr) return false;
      if (t->text == "[") {
        // list literal [ num ]
        if (p + 2 < tokens_.size() && tokens_[p + 2].text == "]") {
          p += 3;
          return true;
        }
        return false;
      }
      if (t->kind == TokenKind::Identifier && p + 1 < tokens_.size() &&
          tokens_[p + 1].text == "[") {
        // index expr: name [ expr ] -- expr inside is an atom here
        size_t q = p + 2;
        if (q < tokens_.size() &&
            (tokens_[q].kind == TokenKind::NumberLiteral ||
             tokens_[q].kind == TokenKind::Identifier) &&
            q + 1 < tokens_.size() && tokens_[q + 1].text == "]") {
          p = q + 2;
          return true;
        }
        return false;
      }
      if (t->kind == TokenKind::Identifier || t->kind == TokenKind::NumberLiteral ||
          t->kind == TokenKind::StringLiteral) {
        ++p;
        return true;
      }
      return false;
    };
    if (!skim_atom()) return false;
    while (p < tokens_.size() &&
           (tokens_[p].text == "+" || tokens_[p].text == and_spelling() ||
            tokens_[p].text == or_spelling())) {
      ++p;
      if (!skim_atom()) return false;
    }
    return p < tokens_.size() &&
           (tokens_[p].text == eq_spelling() || tokens_[p].text == ne_spelling());
  }

  void parse_bin(int parent) {
    if (at("+", 1) || at(and_spelling(), 1) || at(or_spelling(), 1) ||
        needs_bin_wrap()) {
      int node = make_node(NodeKind::BinExpr, parent);
      parse_atom(node);
      while (at("+") || at(and_spelling()) || at(or_spelling())) {
        consume_terminal(node);
        parse_atom(node);
      }
    } else {
      parse_atom(parent);
    }
  }

  // An index expression or list literal followed by a binary operator also
  // needs the BinExpr wrapper.
  bool needs_bin_wrap() const {
    size_t p = pos_;
    if (p < tokens_.size() && tokens_[p].text == "[") {
      p += 3;
    } else if (p < tokens_.size() && tokens_[p].kind == TokenKind::Identifier &&
               p + 1 < tokens_.size() && tokens_[p + 1].text == "[") {
      p += 4;
    } else {
      return false;
    }
    return p < tokens_.size() &&
           (tokens_[p].text == "+" || tokens_[p].text == and_spelling() ||
            tokens_[p].text == or_spelling());
  }

  void parse_atom(int parent) {
    if (at("[")) {
      int node = make_node(NodeKind::ListLit, parent);
      consume_terminal(node);
      expect_kind(TokenKind::NumberLiteral, "number literal", node);
      expect("]", node);
      return;
    }
    if (at_kind(TokenKind::Identifier) && at("[", 1)) {
      int node = make_node(NodeKind::IndexExpr, parent);
      consume_terminal(node);  // name
      consume_terminal(node);  // [
      if (at_kind(TokenKind::NumberLiteral) || at_kind(TokenKind::Identifier)) {
        consume_terminal(node);
      } else {
        throw SyntaxError("index expression", static_cast<int>(pos_));
      }
      expect("]", node);
      return;
    }
    if (at_kind(TokenKind::Identifier) || at_kind(TokenKind::NumberLiteral) ||
        at_kind(TokenKind::StringLiteral)) {
      consume_terminal(parent);
      return;
    }
    throw SyntaxError("an expression", static_cast<int>(pos_));
  }

  const std::vector<Token>& tokens_;
  Dialect dialect_;
  Ast ast_;
  size_t pos_ = 0;
};

}  // namespace detail

inline Ast parse(const std::vector<Token>& tokens, Dialect dialect) {
  return detail::Parser(tokens, dialect).parse();
}

// Unified meta-grammar tags. Five rows come from the cross-dialect
// unification table (dialect spellings collapse to one tag); the rest are
// structural roles. `arith` covers the +/concat operator, which the
// structural set otherwise has no slot for.
inline const std::vector<std::string>& meta_tag_vocabulary() {
  static const std::vector<std::string> v = {
      "def",       "==",       "!=",     "amp-and", "or",        "name",
      "num-lit",   "str-lit",  "assign", "open",    "close",     "stmt-end",
      "cond",      "loop",     "call",   "list-open", "list-close", "arith"};
  return v;
}

inline std::string meta_tag_of_token(const Token& tok) {
  const std::string& t = tok.text;
  if (t == "def" || t == "function") return "def";
  if (t == "==" || t == "===") return "==";
  if (t == "!=" || t == "!==") return "!=";
  if (t == "&" || t == "&&") return "amp-and";
  if (t == "|" || t == "||") return "or";
  if (t == "+") return "arith";
  if (t == "=") return "assign";
  if (t == "(" || t == ":" || t == "{") return "open";
  if (t == ")" || t == "end" || t == "}") return "close";
  if (t == ";") return "stmt-end";
  if (t == "if" || t == "else") return "cond";
  if (t == "while") return "loop";
  if (t == "print") return "call";
  if (t == "[") return "list-open";
  if (t == "]") return "list-close";
  switch (tok.kind) {
    case TokenKind::Identifier: return "name";
    case TokenKind::NumberLiteral: return "num-lit";
    case TokenKind::StringLiteral: return "str-lit";
    default: break;
  }
  return "name";
}

// Per-token unified tags, one per terminal, in token order.
inline std::vector<std::string> meta_tag(const Ast& ast) {
  std::vector<std::string> tags;
  tags.reserve(ast.terminal_node_of_token.size());
  for (int node : ast.terminal_node_of_token) {
    tags.push_back(meta_tag_of_token(*ast.nodes[node].token));
  }
  return tags;
}

inline void sexpr_rec(const Ast& ast, int node, std::ostringstream& out) {
  const AstNode& n = ast.nodes[node];
  if (n.kind == NodeKind::Terminal) {
    out << n.token->text;
    return;
  }
  out << "(" << node_kind_name(n.kind);
  for (int c : n.children) {
    out << " ";
    sexpr_rec(ast, c, out);
  }
  out << ")";
}

// Debug form used by golden tests.
inline std::string to_sexpr(const Ast& ast) {
  std::ostringstream out;
  sexpr_rec(ast, ast.root, out);
  return out.str();
}

// Structural isomorphism modulo terminal spelling.
inline bool isomorphic(const Ast& a, const Ast& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  struct Walker {
    static bool eq(const Ast& a, int na, const Ast& b, int nb) {
      const AstNode& x = a.nodes[na];
      const AstNode& y = b.nodes[nb];
      if (x.kind != y.kind) return false;
      if (x.kind == NodeKind::Terminal) {
        return meta_tag_of_token(*x.token) == meta_tag_of_token(*y.token);
      }
      if (x.children.size() != y.children.size()) return false;
      for (size_t i = 0; i < x.children.size(); ++i) {
        if (!eq(a, x.children[i], b, y.children[i])) return false;
      }
      return true;
    }
  };
  return Walker::eq(a, a.root, b, b.root);
}

}  // namespace crosstype

#include <doctest.h>

#include "crosstype/corpus.hpp"
#include "crosstype/frontend.hpp"

using namespace crosstype;

TEST_CASE("lexing beta strict operators") {
  auto toks = tokenize("a !== b", Dialect::Beta);
  REQUIRE(toks.size() == 3);
  CHECK(toks[0].text == "a");
  CHECK(toks[0].kind == TokenKind::Identifier);
  CHECK(toks[1].text == "!==");
  CHECK(toks[1].kind == TokenKind::Operator);
  CHECK(toks[2].text == "b");
}

TEST_CASE("lexing alpha comparison") {
  auto toks = tokenize("a != b", Dialect::Alpha);
  REQUIRE(toks.size() == 3);
  CHECK(toks[1].text == "!=");
}

TEST_CASE("unknown character reports byte offset") {
  try {
    tokenize("a @ b", Dialect::Alpha);
    FAIL("expected LexError");
  } catch (const LexError& e) {
    CHECK(e.offset == 2);
  }
}

TEST_CASE("token indices are contiguous from zero") {
  auto toks = tokenize("x = 1 + 2 ;", Dialect::Alpha);
  for (size_t i = 0; i < toks.size(); ++i) {
    CHECK(toks[i].index == static_cast<int>(i));
  }
}

TEST_CASE("single statement parse keeps terminals in order") {
  auto toks = tokenize("def f ( ) : a = 1 ; end", Dialect::Alpha);
  Ast ast = parse(toks, Dialect::Alpha);
  REQUIRE(ast.num_terminals() == static_cast<int>(toks.size()));
  for (int i = 0; i < ast.num_terminals(); ++i) {
    CHECK(ast.nodes[ast.terminal_node_of_token[i]].token->text == toks[i].text);
    CHECK(ast.nodes[ast.terminal_node_of_token[i]].token->index == i);
  }
  // a = 1 forms one assignment production with terminals [a, =, 1, ;]
  std::string sexpr = to_sexpr(ast);
  CHECK(sexpr.find("(assign-stmt a = 1 ;)") != std::string::npos);
}

TEST_CASE("if without condition is a syntax error") {
  auto toks = tokenize("def f ( ) : if ( ) : end end", Dialect::Alpha);
  CHECK_THROWS_AS(parse(toks, Dialect::Alpha), SyntaxError);
}

TEST_CASE("meta tags unify dialect spellings") {
  Token beta_eq{"===", TokenKind::Operator, 0};
  CHECK(meta_tag_of_token(beta_eq) == "==");
  Token alpha_def{"def", TokenKind::Keyword, 0};
  Token beta_def{"function", TokenKind::Keyword, 0};
  CHECK(meta_tag_of_token(alpha_def) == "def");
  CHECK(meta_tag_of_token(beta_def) == "def");
  Token ident{"foo", TokenKind::Identifier, 0};
  CHECK(meta_tag_of_token(ident) == "name");
}

TEST_CASE("dialect renderings parse to isomorphic ASTs with equal tags") {
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    LabeledProgram pa = generate_program(seed, Dialect::Alpha, 2, 10);
    LabeledProgram pb = generate_program(seed, Dialect::Beta, 2, 10);
    Ast ast_a = parse(tokenize(to_source(pa), Dialect::Alpha), Dialect::Alpha);
    Ast ast_b = parse(tokenize(to_source(pb), Dialect::Beta), Dialect::Beta);
    REQUIRE(isomorphic(ast_a, ast_b));
    CHECK(meta_tag(ast_a) == meta_tag(ast_b));
  }
}

TEST_CASE("terminal completeness over generated corpus") {
  for (uint64_t seed = 100; seed < 140; ++seed) {
    for (Dialect d : {Dialect::Alpha, Dialect::Beta}) {
      LabeledProgram p = generate_program(seed, d, 1, 15);
      auto toks = tokenize(to_source(p), d);
      REQUIRE(toks.size() == p.tokens.size());
      Ast ast = parse(toks, d);
      REQUIRE(ast.num_terminals() == static_cast<int>(toks.size()));
      auto tags = meta_tag(ast);
      CHECK(tags.size() == toks.size());
    }
  }
}

TEST_CASE("table rows: non-equality and function definition") {
  // alpha != / beta !== carry the same unified tag
  auto ta = meta_tag(parse(tokenize("def f ( ) : a = 1 != 2 ; end", Dialect::Alpha),
                           Dialect::Alpha));
  auto tb = meta_tag(parse(
      tokenize("function f ( ) { a = 1 !== 2 ; }", Dialect::Beta), Dialect::Beta));
  CHECK(ta == tb);
  CHECK(ta[0] == "def");
  CHECK(ta[8] == "!=");
}

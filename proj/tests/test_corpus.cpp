#include <doctest.h>

#include <cstdio>
#include <set>

#include "crosstype/corpus.hpp"
#include "crosstype/frontend.hpp"

using namespace crosstype;

TEST_CASE("generation is deterministic") {
  for (uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
    LabeledProgram a = generate_program(seed, Dialect::Alpha, 3, 12);
    LabeledProgram b = generate_program(seed, Dialect::Alpha, 3, 12);
    CHECK(a == b);
  }
}

TEST_CASE("alpha and beta share the abstract form") {
  for (uint64_t seed = 0; seed < 30; ++seed) {
    AbstractProgram p1 = generate_abstract(seed, 2, 8, static_cast<int>(seed % kNumProfiles));
    AbstractProgram p2 = generate_abstract(seed, 2, 8, static_cast<int>(seed % kNumProfiles));
    CHECK(render(p1, Dialect::Alpha) == render(p2, Dialect::Alpha));
    // the same abstract program renders to different surfaces
    LabeledProgram a = generate_program(seed, Dialect::Alpha, 2, 8);
    LabeledProgram b = generate_program(seed, Dialect::Beta, 2, 8);
    CHECK(a.tokens.size() == b.tokens.size());
    CHECK(a.labels == b.labels);  // aligned annotation sites
  }
}

TEST_CASE("labels point at valid token indices with closed vocabulary") {
  for (uint64_t seed = 40; seed < 90; ++seed) {
    LabeledProgram p = generate_program(seed, Dialect::Beta, 1, 20);
    CHECK(!p.labels.empty());
    for (const auto& [pos, type] : p.labels) {
      REQUIRE(pos >= 0);
      REQUIRE(pos < static_cast<int>(p.tokens.size()));
      CHECK((type == MetaType::Boolean || type == MetaType::Number ||
             type == MetaType::String || type == MetaType::List));
    }
  }
}

TEST_CASE("label soundness: typing rules reproduce emitted labels") {
  for (uint64_t seed = 200; seed < 260; ++seed) {
    int profile = static_cast<int>(seed % kNumProfiles);
    AbstractProgram p = generate_abstract(seed, 2, 15, profile);
    auto derived = derive_labels(p);
    CHECK(derived == p.site_types);
  }
}

TEST_CASE("render handles the empty program") {
  AbstractProgram p;
  auto toks = render(p, Dialect::Alpha);
  // the function scaffold alone
  CHECK(toks == std::vector<std::string>{"def", "f", "(", ")", ":", "end"});
}

TEST_CASE("render rejects unsupported abstract operators") {
  AbstractProgram p;
  AbstractStmt s{AbstractStmt::Kind::Assign, "x", {}, {}, {}, false, 0};
  s.expr = AbstractExpr{AbstractExpr::Kind::Binary, "", "xor", "",
                        {AbstractExpr{AbstractExpr::Kind::NumLit, "1", "", "", {}},
                         AbstractExpr{AbstractExpr::Kind::NumLit, "2", "", "", {}}}};
  p.body.push_back(s);
  CHECK_THROWS_AS(render(p, Dialect::Alpha), RenderError);
}

TEST_CASE("intra split uses largest-remainder rounding") {
  std::vector<LabeledProgram> programs(10);
  for (int i = 0; i < 10; ++i) {
    programs[i].id = i;
    programs[i].profile = i % kNumProfiles;
  }
  DatasetManifest m = split_dataset(programs, {0.8, 0.1, 0.1}, SplitMode::Intra, 1);
  CHECK(m.counts[0] == 8);
  CHECK(m.counts[1] == 1);
  CHECK(m.counts[2] == 1);
  DatasetManifest m2 = split_dataset(programs, {0.8, 0.1, 0.1}, SplitMode::Intra, 1);
  CHECK(m == m2);
}

TEST_CASE("inter split keeps profiles whole and rejects too few") {
  std::vector<LabeledProgram> programs(40);
  for (int i = 0; i < 40; ++i) {
    programs[i].id = i;
    programs[i].profile = i % 5;
  }
  DatasetManifest m = split_dataset(programs, {0.6, 0.2, 0.2}, SplitMode::Inter, 3);
  std::map<int, std::set<int>> profile_splits;
  for (int i = 0; i < 40; ++i) {
    profile_splits[programs[i].profile].insert(m.split_of.at(i));
  }
  for (const auto& [profile, splits] : profile_splits) {
    CHECK(splits.size() == 1);  // zero leakage
  }
  std::vector<LabeledProgram> two(10);
  for (int i = 0; i < 10; ++i) {
    two[i].id = i;
    two[i].profile = i % 2;
  }
  CHECK_THROWS_AS(split_dataset(two, {0.8, 0.1, 0.1}, SplitMode::Inter, 3), UsageError);
}

TEST_CASE("split ratios must sum to one") {
  std::vector<LabeledProgram> programs(4);
  for (int i = 0; i < 4; ++i) programs[i].id = i;
  CHECK_THROWS_AS(split_dataset(programs, {0.5, 0.1, 0.1}, SplitMode::Intra, 0),
                  UsageError);
}

TEST_CASE("dataset json lines round trip") {
  std::vector<LabeledProgram> programs;
  for (uint64_t i = 0; i < 100; ++i) {
    LabeledProgram p = generate_program(derive_seed(42, i),
                                        i % 2 ? Dialect::Alpha : Dialect::Beta, 1, 12);
    p.id = static_cast<int64_t>(i);
    programs.push_back(std::move(p));
  }
  std::string path = "roundtrip_test.jsonl";
  write_dataset(path, programs);
  auto back = read_dataset(path);
  REQUIRE(back.size() == programs.size());
  for (size_t i = 0; i < back.size(); ++i) CHECK(back[i] == programs[i]);
  std::remove(path.c_str());
}

TEST_CASE("missing tokens field names the field and line") {
  std::string path = "bad_record.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":0,"profile":1,"dialect":"alpha","labels":{}})" << "\n";
  }
  try {
    read_dataset(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("tokens") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("empty file yields empty stream") {
  std::string path = "empty_test.jsonl";
  { std::ofstream out(path); }
  CHECK(read_dataset(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("empty statement range is rejected") {
  CHECK_THROWS_AS(generate_abstract(1, 5, 4, 0), UsageError);
}

TEST_CASE("generated programs parse in their own dialect") {
  for (uint64_t seed = 300; seed < 340; ++seed) {
    for (Dialect d : {Dialect::Alpha, Dialect::Beta}) {
      LabeledProgram p = generate_program(seed, d, 1, 25);
      CHECK_NOTHROW(parse(tokenize(to_source(p), d), d));
    }
  }
}

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "daqa/clips/composer.hpp"
#include "daqa/common/error.hpp"
#include "daqa/events/library.hpp"
#include "daqa/oracle/oracle.hpp"
#include "daqa/questions/answer.hpp"
#include "daqa/questions/balance.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"
#include "daqa/questions/text.hpp"
#include "test_util.hpp"

namespace daqa::questions {
namespace {

using clips::ClipAnnotation;
using clips::EventOccurrence;

ClipAnnotation make_clip(const std::vector<std::string>& types, const std::vector<double>& loud = {},
                         const std::vector<double>& dur = {}) {
  ClipAnnotation c;
  c.clip_id = "clip";
  double t = 0;
  for (std::size_t i = 0; i < types.size(); ++i) {
    const double d = dur.empty() ? 1.0 + 0.1 * double(i) : dur[i];
    c.events.push_back({types[i], int(i), t, t + d, loud.empty() ? 10.0 + double(i) : loud[i], int(i) + 1});
    t += d;
  }
  c.total_duration_s = t;
  return c;
}

Json catalog_json() { return read_json(events::default_data_dir() / "catalog.json"); }

Json& template_json(Json& cat, const std::string& id) {
  for (auto& t : cat["templates"])
    if (t["template_id"] == id) return t;
  throw std::runtime_error("no template " + id);
}

TEST(AnswerVocab, ThirtySixEntriesInFixedOrder) {
  const AnswerVocab v;
  ASSERT_EQ(v.size(), 36u);
  EXPECT_EQ(v.label(0), "yes");
  EXPECT_EQ(v.label(1), "no");
  const auto tax = events::default_taxonomy();
  for (std::size_t i = 0; i < tax.size(); ++i) EXPECT_EQ(v.label(2 + i), tax.at(i).id);
  EXPECT_EQ(v.label(22), "nothing");
  for (int n = 0; n <= 12; ++n) EXPECT_EQ(v.label(23 + n), std::to_string(n));
  EXPECT_THROW(v.integer(13), GenerationError);
  EXPECT_FALSE(v.index_of("13"));
}

TEST(Catalog, DefaultHas54TemplatesOverAllSkills) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  ASSERT_EQ(cat.size(), 54u);
  std::map<Skill, int> per_skill;
  for (const auto& t : cat.templates()) {
    ++per_skill[t.skill];
    EXPECT_GE(t.phrasings.size(), 2u) << t.id;
    EXPECT_FALSE(t.support.empty()) << t.id;
  }
  for (auto s : kAllSkills) EXPECT_GT(per_skill[s], 0) << to_string(s);
}

TEST(Catalog, CoversEveryReferenceMechanism) {
  const auto cat = default_catalog(events::default_taxonomy());
  std::set<std::string> ops;
  std::function<void(const Json&)> walk = [&](const Json& j) {
    if (j.is_object()) {
      if (j.contains("op")) ops.insert(j["op"].get<std::string>());
      for (const auto& [k, v] : j.items()) walk(v);
    } else if (j.is_array()) {
      for (const auto& v : j) walk(v);
    }
  };
  for (const auto& t : cat.templates()) walk(t.semantics);
  for (const char* op : {"ByType", "ByOrdinal", "Relative", "Superlative", "AttrFiltered", "AllSide"})
    EXPECT_TRUE(ops.count(op)) << op;
}

TEST(Catalog, RejectsUndeclaredPhrasingPlaceholder) {
  auto j = catalog_json();
  template_json(j, "exist_type")["phrasings"][0] = "Was there a <S> <A> <RO> the thing?";
  try {
    catalog_from_json(j, events::default_taxonomy());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("exist_type"), std::string::npos);
    EXPECT_NE(what.find("RO"), std::string::npos);
  }
}

TEST(Catalog, RejectsDuplicateIds) {
  auto j = catalog_json();
  j["templates"].push_back(template_json(j, "count_all"));
  EXPECT_THROW(catalog_from_json(j, events::default_taxonomy()), SchemaError);
}

TEST(Catalog, RejectsMixedAttributeNode) {
  auto j = catalog_json();
  auto& t = template_json(j, "compare_types_loudness");
  t["semantics"]["attr"] = "duration";
  EXPECT_THROW(catalog_from_json(j, events::default_taxonomy()), SchemaError);
  auto k = catalog_json();
  auto& f = template_json(k, "exist_attr_than_loudness");
  f["semantics"]["set"]["attr"] = "duration";
  EXPECT_THROW(catalog_from_json(k, events::default_taxonomy()), SchemaError);
}

TEST(Catalog, RejectsBadSupportAndSkill) {
  auto j = catalog_json();
  template_json(j, "count_all")["support"] = {"0", "13"};
  EXPECT_THROW(catalog_from_json(j, events::default_taxonomy()), SchemaError);
  auto k = catalog_json();
  template_json(k, "count_all")["skill"] = "Exist";
  EXPECT_THROW(catalog_from_json(k, events::default_taxonomy()), SchemaError);
}

TEST(Catalog, TemporalFlagMatchesSemantics) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  EXPECT_FALSE(cat.by_id("exist_type").requires_temporal);
  EXPECT_TRUE(cat.by_id("query_ordinal").requires_temporal);
  EXPECT_TRUE(cat.by_id("count_side").requires_temporal);
  EXPECT_FALSE(cat.by_id("compare_types_loudness").requires_temporal);
}

TEST(Ast, DepthAndJsonRoundTrip) {
  QuestionAst q{Count{all_side(by_ordinal(1), Direction::After)}};
  EXPECT_EQ(depth(q), 3);
  EXPECT_EQ(to_json(ast_from_json(to_json(q))), to_json(q));
  QuestionAst e{Exist{type_filtered("d000", all_side(relative(by_type("b000"), Direction::Before), Direction::After))}};
  EXPECT_EQ(depth(e), 5);
  EXPECT_EQ(to_json(ast_from_json(to_json(e))), to_json(e));
  EXPECT_EQ(comparative("quieter"), (std::pair<Attr, bool>{Attr::Loudness, false}));
  EXPECT_EQ(comparative_word(Attr::Duration, true), "longer");
}

TEST(Balance, GapArithmetic) {
  EXPECT_NEAR(support_gap({{"yes", 11}, {"no", 10}}, {"yes", "no"}, 21), 1.0 / 21, 1e-12);
  EXPECT_NEAR(support_gap({{"yes", 13}, {"no", 10}}, {"yes", "no"}, 23), 3.0 / 23, 1e-12);
  EXPECT_NEAR(support_gap({{"yes", 51}, {"no", 3}}, {"yes", "no"}, 54), 48.0 / 54, 1e-12);
  EXPECT_NEAR(support_gap({{"yes", 4}}, {"yes", "no", "nothing"}, 4), 1.0, 1e-12);
  EXPECT_EQ(support_gap({}, {"yes", "no"}, 0), 0.0);
}

TEST(Balance, SpecExamples) {
  BalanceState s;  // threshold 0.05, warm-up 50
  s.declare("t", {"yes", "no"});
  EXPECT_TRUE(s.would_accept("t", "yes"));  // empty histogram
  for (int i = 0; i < 10; ++i) {
    ASSERT_TRUE(s.accept("t", "yes"));
    ASSERT_TRUE(s.accept("t", "no"));
  }
  EXPECT_TRUE(s.would_accept("t", "yes"));  // {10, 10} + yes
  ASSERT_TRUE(s.accept("t", "yes"));
  ASSERT_TRUE(s.accept("t", "yes"));
  EXPECT_EQ(s.histogram("t").at("yes"), 12);
  EXPECT_FALSE(s.would_accept("t", "yes"));  // {12, 10} + yes: 3 over a denominator of at least 23
  EXPECT_TRUE(s.would_accept("t", "no"));
  EXPECT_FALSE(s.would_accept("t", "4"));    // outside the support
  EXPECT_NEAR(s.gap("t"), 2.0 / 22, 1e-12);
}

TEST(Balance, PastWarmupIsTheLiteralRule) {
  BalanceState p;
  p.declare("t", {"yes", "no"});
  for (int i = 0; i < 30; ++i) {
    ASSERT_TRUE(p.accept("t", "yes"));
    ASSERT_TRUE(p.accept("t", "no"));
  }
  int extra = 0;
  while (p.accept("t", "yes")) ++extra;
  // (30 + extra + 1 - 30) / (61 + extra) > 0.05 first at extra = 3.
  EXPECT_EQ(extra, 3);
  EXPECT_LE(p.gap("t"), 0.05);
}

TEST(Balance, GapStaysBoundedUnderAdversarialStream) {
  BalanceState s;
  s.declare("t", {"0", "1", "2"});
  Rng rng(4);
  for (int i = 0; i < 5000; ++i) {
    // 80% of candidates are "0".
    const std::string c = uniform01(rng) < 0.8 ? "0" : (uniform01(rng) < 0.5 ? "1" : "2");
    s.accept("t", c);
    if (s.total("t") >= s.config().warmup) {
      ASSERT_LE(s.gap("t"), s.config().gap_threshold + 1e-12);
    }
  }
  EXPECT_GT(s.total("t"), 500);
}

TEST(Text, FillAndTokenize) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto& t = cat.by_id("query_immediate_type");
  const Bindings b{{"RO", "before"}, {"S", "d002"}};
  EXPECT_EQ(join_tokens(tokenize(fill_phrasing("What did you hear <RO> the <S> <A>?", t, b, tax))),
            "what did you hear before the dog barking");
  EXPECT_EQ(tokenize("Hello, World. Yes?"), (std::vector<std::string>{"hello", "world", "yes"}));
}

TEST(Text, SynonymsFireOrNot) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto& t = cat.by_id("exist_type");
  const Bindings b{{"S", "h000"}};
  const SynonymTable syn{{"human", {"person"}}};
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto forced = realize_text(t, b, rng, tax, syn, 1.0);
    EXPECT_NE(std::find(forced.begin(), forced.end(), "person"), forced.end());
    EXPECT_EQ(std::find(forced.begin(), forced.end(), "human"), forced.end());
    const auto never = realize_text(t, b, rng, tax, syn, 0.0);
    EXPECT_NE(std::find(never.begin(), never.end(), "human"), never.end());
  }
}

TEST(Engine, NonUniqueReferentIsNeverBound) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto clip = make_clip({"d000", "b000", "d000", "c000", "b001"});
  const auto& t = cat.by_id("query_immediate_type");
  const auto valid = valid_bindings(t, clip, tax);
  ASSERT_FALSE(valid.empty());
  for (const auto& [b, answer] : valid) EXPECT_NE(b.at("S"), "d000");
  const auto only_doors = make_clip({"d000", "d000", "d000", "d000", "d000"});
  EXPECT_TRUE(valid_bindings(t, only_doors, tax).empty());
  BalanceState bal;
  Rng rng(2);
  const SynonymTable syn;
  const EngineContext ctx{tax, cat, syn, 0.5};
  const auto r = instantiate(t, only_doors, rng, bal, ctx);
  EXPECT_FALSE(r.question);
  EXPECT_EQ(r.rejection, Rejection::NoValidBinding);
}

TEST(Engine, ExistOnSinglePhoneIsYes) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto clip = make_clip({"p000", "b000", "d000", "c000", "b001"});
  const auto valid = valid_bindings(cat.by_id("exist_type"), clip, tax);
  bool found = false;
  for (const auto& [b, a] : valid)
    if (b.at("S") == "p000") {
      EXPECT_EQ(a, "yes");
      found = true;
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(oracle::evaluate(QuestionAst{Exist{all_of_type("p000")}}, clip), "yes");
}

TEST(Engine, BalanceRejectionIsReported) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto& t = cat.by_id("count_all");  // always answers the event count
  const auto clip = make_clip({"p000", "b000", "d000", "c000", "b001"});
  BalanceState bal;
  const SynonymTable syn;
  const EngineContext ctx{tax, cat, syn, 0.5};
  Rng rng(3);
  int accepted = 0, rejected = 0;
  for (int i = 0; i < 60; ++i) {
    const auto r = instantiate(t, clip, rng, bal, ctx);
    if (r.question) {
      ++accepted;
      EXPECT_EQ(r.question->answer, "5");
    } else {
      EXPECT_EQ(r.rejection, Rejection::BalanceRejected);
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
  EXPECT_EQ(accepted, bal.total("count_all"));
}

TEST(Engine, FamiliesAgreeWithOracleOnRandomClips) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  events::SyntheticLibraryConfig lc;
  lc.instances_per_type = 2;
  lc.duration_scale = 0.1;
  const auto lib = events::build_synthetic_library(tax, lc);
  clips::SplitConfig sc;
  sc.n_train = 60;
  sc.n_val = 1;
  sc.n_test = 1;
  const auto splits = clips::generate_split(sc, lib);
  std::size_t checked = 0;
  for (const auto& clip : splits.train.clips)
    for (const auto& t : cat.templates())
      for (const auto& [b, answer] : valid_bindings(t, clip, tax)) {
        const auto o = oracle::evaluate(bind_semantics(t, b), clip);
        ASSERT_TRUE(o) << t.id;
        ASSERT_EQ(*o, answer) << t.id << " on " << clip.clip_id;
        ++checked;
      }
  EXPECT_GT(checked, 10000u);
}

class Generation : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    events::SyntheticLibraryConfig lc;
    lc.instances_per_type = 4;
    lc.duration_scale = 0.1;
    lib_ = new events::EventLibrary(events::build_synthetic_library(events::default_taxonomy(), lc));
    clips::SplitConfig sc;
    sc.master_seed = 7;
    splits_ = new clips::GeneratedSplits(clips::generate_split(sc, *lib_));
  }
  static void TearDownTestSuite() {
    delete splits_;
    delete lib_;
  }
  static events::EventLibrary* lib_;
  static clips::GeneratedSplits* splits_;
};
events::EventLibrary* Generation::lib_ = nullptr;
clips::GeneratedSplits* Generation::splits_ = nullptr;

TEST_F(Generation, DeskCountsAndDeterminism) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto syn = default_synonyms();
  const EngineContext ctx{tax, cat, syn, 0.5};
  GenerationConfig g;
  g.master_seed = 7;
  const AnswerVocab vocab(tax);
  for (auto s : clips::kAllSplits) {
    const auto& clips = splits_->get(s).clips;
    const auto a = generate_questions(clips, s, g, ctx);
    const auto b = generate_questions(clips, s, g, ctx);
    ASSERT_EQ(a.questions.size(), b.questions.size());
    for (std::size_t i = 0; i < a.questions.size(); ++i) ASSERT_EQ(to_json(a.questions[i]), to_json(b.questions[i]));
    EXPECT_LE(a.questions.size(), clips.size() * std::size_t(g.attempts(s)));
    std::map<std::string, int> per_clip;
    std::set<std::string> ids;
    for (const auto& q : a.questions) {
      ++per_clip[q.clip_id];
      EXPECT_TRUE(ids.insert(q.question_id).second);
      EXPECT_TRUE(vocab.index_of(q.answer));
      EXPECT_GE(q.tokens.size(), 3u);
    }
    for (const auto& [c, n] : per_clip) EXPECT_LE(n, g.attempts(s));
  }
}

TEST_F(Generation, LowResourceOnePerClip) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto syn = default_synonyms();
  const EngineContext ctx{tax, cat, syn, 0.5};
  GenerationConfig g;
  g.attempts_train = 1;
  const auto out = generate_questions(splits_->train.clips, clips::SplitName::Train, g, ctx);
  std::map<std::string, int> per_clip;
  for (const auto& q : out.questions) ++per_clip[q.clip_id];
  for (const auto& [c, n] : per_clip) EXPECT_EQ(n, 1);
  EXPECT_LE(out.questions.size(), splits_->train.clips.size());
  EXPECT_GE(out.questions.size(), splits_->train.clips.size() * 9 / 10);
}

TEST_F(Generation, FileRoundTripAndRescan) {
  test::TempDir dir("questions");
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto syn = default_synonyms();
  const EngineContext ctx{tax, cat, syn, 0.5};
  GenerationConfig g;
  const auto out = generate_questions(splits_->train.clips, clips::SplitName::Train, g, ctx);
  write_questions(dir.path() / "q.jsonl", out.questions);
  const auto back = read_questions(dir.path() / "q.jsonl");
  ASSERT_EQ(back.size(), out.questions.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(to_json(back[i]), to_json(out.questions[i]));
  const auto row = read_jsonl(dir.path() / "q.jsonl").at(0);
  for (const char* k : {"question_id", "clip_id", "template_id", "skill", "text_tokens", "ast", "answer"})
    EXPECT_TRUE(row.contains(k)) << k;
  for (const auto& tb : rescan_balance(back, cat, g.balance)) {
    EXPECT_EQ(tb.total, out.balance.total(tb.template_id));
    EXPECT_NEAR(tb.gap, out.balance.gap(tb.template_id), 1e-12);
  }
}

TEST(GenerationSmoke, EveryTemplateInstantiable) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  events::SyntheticLibraryConfig lc;
  lc.instances_per_type = 4;
  lc.duration_scale = 0.1;
  const auto lib = events::build_synthetic_library(tax, lc);
  clips::SplitConfig sc;
  sc.n_train = 1000;
  sc.n_val = 1;
  sc.n_test = 1;
  sc.master_seed = 21;
  const auto splits = clips::generate_split(sc, lib);
  const auto syn = default_synonyms();
  const EngineContext ctx{tax, cat, syn, 0.5};
  GenerationConfig g;
  const auto out = generate_questions(splits.train.clips, clips::SplitName::Train, g, ctx);
  std::map<std::string, int> per_template;
  std::size_t min_len = 1000;
  for (const auto& q : out.questions) {
    ++per_template[q.template_id];
    min_len = std::min(min_len, q.tokens.size());
  }
  for (const auto& t : cat.templates()) EXPECT_GE(per_template[t.id], 1) << t.id;
  EXPECT_GE(min_len, 3u);
  for (const auto& tb : rescan_balance(out.questions, cat, g.balance))
    if (tb.past_warmup) {
      EXPECT_LE(tb.gap, g.balance.gap_threshold + 1e-12) << tb.template_id;
    }
}

}  // namespace
}  // namespace daqa::questions

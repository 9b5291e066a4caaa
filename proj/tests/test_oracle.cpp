#include <gtest/gtest.h>

#include <cmath>

#include "daqa/clips/composer.hpp"
#include "daqa/common/error.hpp"
#include "daqa/events/library.hpp"
#include "daqa/oracle/oracle.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"
#include "daqa/questions/text.hpp"
#include "oracle_reference.hpp"
#include "test_util.hpp"

namespace daqa::oracle {
namespace {

using namespace questions;

clips::ClipAnnotation clip_of(const std::vector<std::string>& types) {
  clips::ClipAnnotation c;
  c.clip_id = "c";
  double t = 0;
  for (std::size_t i = 0; i < types.size(); ++i) {
    c.events.push_back({types[i], 0, t, t + 1.0 + 0.5 * double(i), 5.0 + double(i), int(i) + 1});
    t = c.events.back().end_s;
  }
  c.total_duration_s = t;
  return c;
}

TEST(Oracle, ResolveSelectorExamples) {
  const auto c = clip_of({"d000", "c001", "d000"});
  EXPECT_EQ(resolve_selector(*by_ordinal(2), c), Ref::occurrence(1));
  EXPECT_EQ(c.events[1].type_id, "c001");
  EXPECT_EQ(resolve_selector(*by_type("d000"), c), Ref::invalid());
  EXPECT_EQ(resolve_selector(*relative(last(), Direction::After), c), Ref::nothing());
  EXPECT_EQ(resolve_selector(*relative(by_ordinal(1), Direction::Before), c), Ref::nothing());
  EXPECT_EQ(resolve_selector(*relative(by_ordinal(1), Direction::After, false), c), Ref::invalid());
  EXPECT_EQ(resolve_selector(*by_ordinal(4), c), Ref::invalid());
  EXPECT_EQ(resolve_selector(*superlative(Attr::Loudness, Extreme::Max), c), Ref::occurrence(2));
}

TEST(Oracle, EvaluateExamples) {
  // Clip with one vehicle passing by.
  const auto fig = clip_of({"b000", "c004", "d002", "h000", "b001"});
  EXPECT_EQ(evaluate(QuestionAst{Count{all_of_type("c004")}}, fig), "1");
  const auto seven = clip_of({"b000", "c004", "d002", "h000", "b001", "c000", "d000"});
  EXPECT_EQ(evaluate(QuestionAst{Count{type_filtered("b000", all_events())}}, seven), "1");
  EXPECT_EQ(evaluate(QuestionAst{Count{all_side(by_ordinal(1), Direction::After)}}, seven), "6");
  for (const auto& t : {"b000", "d000", "p000"})
    EXPECT_EQ(evaluate(QuestionAst{CompareInt{all_of_type(t), all_of_type(t), CountRel::Equal}}, seven), "yes");
  EXPECT_EQ(evaluate(QuestionAst{QueryType{relative(last(), Direction::After)}}, seven), "nothing");
  EXPECT_EQ(evaluate(QuestionAst{Exist{all_of_type("p000")}}, seven), "no");
  EXPECT_EQ(evaluate(QuestionAst{QueryType{by_type("zzz")}}, seven), std::nullopt);
}

TEST(Oracle, TiesAreInvalid) {
  auto c = clip_of({"b000", "c000", "d000", "h000", "b001"});
  c.events[1].loudness = c.events[4].loudness * (1.0 + 1e-12);
  EXPECT_EQ(resolve_selector(*superlative(Attr::Loudness, Extreme::Max), c), Ref::invalid());
  EXPECT_EQ(evaluate(QuestionAst{CompareAttr{by_ordinal(2), by_ordinal(5), Attr::Loudness, Order::Greater}}, c),
            std::nullopt);
  EXPECT_EQ(evaluate(QuestionAst{CompareAttr{by_ordinal(2), by_ordinal(5), Attr::Loudness, Order::Equal}}, c), "yes");
  EXPECT_EQ(evaluate(QuestionAst{Exist{attr_filtered(Attr::Loudness, true, by_ordinal(2))}}, c), std::nullopt);
}

TEST(Oracle, CountAboveTwelveThrows) {
  std::vector<std::string> types(13, "d000");
  const auto c = clip_of(types);
  EXPECT_THROW(evaluate(QuestionAst{Count{all_events()}}, c), GenerationError);
}

TEST(Oracle, SmallWorldAgreesWithBruteForce) {
  const std::vector<std::string> types = {"d000", "b000", "c000"};
  const auto pools = test::make_pools(types, {1, 2, 0});
  const auto worlds = test::small_worlds(types, 3);
  std::size_t checked = 0, defined = 0;
  for (const auto& w : worlds) {
    const test::BruteForce ref(test::world_of(w));
    test::for_each_ast(pools, [&](const QuestionAst& q) {
      const auto a = evaluate(q, w);
      const auto b = ref.answer(q);
      ++checked;
      defined += a.has_value();
      if (a != b) {
        ADD_FAILURE() << to_json(q).dump() << " on " << to_json(w).dump() << ": oracle "
                      << a.value_or("<invalid>") << " reference " << b.value_or("<invalid>");
      }
    });
    if (HasFailure()) break;
  }
  EXPECT_GT(checked, 1000000u);
  EXPECT_GT(defined, checked / 4);
}

TEST(Oracle, BruteForceAgreesOnGeneratedQuestions) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  events::SyntheticLibraryConfig lc;
  lc.instances_per_type = 3;
  lc.duration_scale = 0.1;
  const auto lib = events::build_synthetic_library(tax, lc);
  clips::SplitConfig sc;
  sc.n_train = 30;
  sc.n_val = 1;
  sc.n_test = 1;
  const auto splits = clips::generate_split(sc, lib);
  for (const auto& clip : splits.train.clips) {
    const test::BruteForce ref(test::world_of(clip));
    for (const auto& t : cat.templates())
      for (const auto& [b, answer] : valid_bindings(t, clip, tax))
        ASSERT_EQ(ref.answer(bind_semantics(t, b)), answer) << t.id;
  }
}

TEST(Oracle, MonotoneLoudnessInvariance) {
  const std::vector<std::string> types = {"d000", "b000", "c000", "h001"};
  const auto pools = test::make_pools(types, {1, 2, 3, 0});
  std::vector<QuestionAst> loud;
  test::for_each_ast(pools, [&](const QuestionAst& q) {
    const auto s = to_json(q).dump();
    if (s.find("loudness") != std::string::npos) loud.push_back(q);
  });
  ASSERT_GT(loud.size(), 100u);
  Rng rng(17);
  const std::vector<std::function<double(double)>> transforms = {
      [](double x) { return 3.0 * x + 7.0; },
      [](double x) { return std::sqrt(x); },
      [](double x) { return x * x * x; },
      [](double x) { return std::log1p(x); },
      [](double x) { return std::exp(x / 50.0); },
  };
  int defined = 0;
  for (int trial = 0; trial < 200; ++trial) {
    clips::ClipAnnotation c;
    c.clip_id = "m";
    const int n = int(uniform_int(rng, 5, 12));
    double t = 0;
    for (int i = 0; i < n; ++i) {
      const double d = uniform_real(rng, 0.5, 5.0);
      c.events.push_back({types[uniform_index(rng, types.size())], i, t, t + d, uniform_real(rng, 10.0, 200.0), i + 1});
      t += d;
    }
    c.total_duration_s = t;
    const auto& q = loud[uniform_index(rng, loud.size())];
    const auto& f = transforms[uniform_index(rng, transforms.size())];
    auto moved = c;
    for (auto& e : moved.events) e.loudness = f(e.loudness);
    const auto a = evaluate(q, c);
    defined += a.has_value();
    ASSERT_EQ(a, evaluate(q, moved)) << to_json(q).dump();
  }
  EXPECT_GT(defined, 20);
}

TEST(Verify, FaultInjection) {
  const auto tax = events::default_taxonomy();
  const auto cat = default_catalog(tax);
  const auto syn = default_synonyms();
  events::SyntheticLibraryConfig lc;
  lc.instances_per_type = 3;
  lc.duration_scale = 0.1;
  const auto lib = events::build_synthetic_library(tax, lc);
  clips::SplitConfig sc;
  sc.n_train = 20;
  sc.n_val = 1;
  sc.n_test = 1;
  const auto splits = clips::generate_split(sc, lib);
  const EngineContext ctx{tax, cat, syn, 0.5};
  const auto out = generate_questions(splits.train.clips, clips::SplitName::Train, GenerationConfig{}, ctx);
  std::vector<Json> rows;
  for (const auto& q : out.questions) rows.push_back(to_json(q));
  ASSERT_GT(rows.size(), 10u);

  const auto clean = verify_dataset(rows, splits.train.clips);
  EXPECT_EQ(clean.total, rows.size());
  EXPECT_TRUE(clean.consistent());

  auto corrupt = rows;
  corrupt[3]["answer"] = corrupt[3]["answer"] == "yes" ? "no" : "yes";
  const auto one = verify_dataset(corrupt, splits.train.clips);
  ASSERT_EQ(one.mismatches.size(), 1u);
  EXPECT_EQ(one.mismatches[0].question_id, rows[3]["question_id"]);
  EXPECT_EQ(one.mismatches[0].kind, Mismatch::Kind::WrongAnswer);

  auto fewer = splits.train.clips;
  const std::string dropped = fewer.front().clip_id;
  fewer.erase(fewer.begin());
  const auto missing = verify_dataset(rows, fewer);
  std::size_t expect = 0;
  for (const auto& r : rows) expect += r["clip_id"] == dropped;
  EXPECT_GE(missing.count(Mismatch::Kind::MissingClip), 1u);
  EXPECT_EQ(missing.count(Mismatch::Kind::MissingClip), expect);

  test::TempDir dir("verify");
  write_jsonl(dir.path() / "q.jsonl", rows);
  clips::write_annotations(dir.path() / "a.jsonl", splits.train.clips);
  EXPECT_TRUE(verify_dataset(dir.path() / "q.jsonl", dir.path() / "a.jsonl").consistent());
  EXPECT_TRUE(to_json(clean).contains("total"));
}

}  // namespace
}  // namespace daqa::oracle

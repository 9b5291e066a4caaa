#include <benchmark/benchmark.h>

#include "daqa/clips/composer.hpp"
#include "daqa/events/library.hpp"
#include "daqa/features/mfsc.hpp"
#include "daqa/oracle/oracle.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"
#include "daqa/questions/text.hpp"

using namespace daqa;

static void BM_Mfsc(benchmark::State& state) {
  const auto seconds = static_cast<std::size_t>(state.range(0));
  Rng r(1);
  std::vector<float> wav(seconds * 16000);
  for (auto& v : wav) v = static_cast<float>(uniform_real(r, -0.5, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(features::mfsc(wav, 16000));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(wav.size()));
}
BENCHMARK(BM_Mfsc)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

namespace {

struct Corpus {
  events::Taxonomy tax = events::default_taxonomy();
  questions::Catalog cat = questions::default_catalog(tax);
  questions::SynonymTable syn = questions::default_synonyms();
  clips::GeneratedSplits splits;
  Corpus() {
    events::SyntheticLibraryConfig lc;
    lc.instances_per_type = 2;
    lc.duration_scale = 0.1;
    clips::SplitConfig sc;
    sc.n_train = 50;
    sc.n_val = 1;
    sc.n_test = 1;
    splits = clips::generate_split(sc, events::build_synthetic_library(tax, lc));
  }
};

const Corpus& corpus() {
  static const Corpus c;
  return c;
}

}  // namespace

static void BM_QuestionGeneration(benchmark::State& state) {
  const auto& c = corpus();
  const questions::EngineContext ctx{c.tax, c.cat, c.syn, 0.5};
  const questions::GenerationConfig gc;
  std::size_t n = 0;
  for (auto _ : state) n += questions::generate_questions(c.splits.train.clips, clips::SplitName::Train, gc, ctx).questions.size();
  state.SetItemsProcessed(static_cast<std::int64_t>(n));
}
BENCHMARK(BM_QuestionGeneration)->Unit(benchmark::kMillisecond);

static void BM_OracleEvaluate(benchmark::State& state) {
  const auto& c = corpus();
  const questions::EngineContext ctx{c.tax, c.cat, c.syn, 0.5};
  const auto qs = questions::generate_questions(c.splits.train.clips, clips::SplitName::Train, {}, ctx).questions;
  std::map<std::string, const clips::ClipAnnotation*> by_id;
  for (const auto& clip : c.splits.train.clips) by_id[clip.clip_id] = &clip;
  for (auto _ : state)
    for (const auto& q : qs) benchmark::DoNotOptimize(oracle::evaluate(q.ast, *by_id.at(q.clip_id)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(qs.size()));
}
BENCHMARK(BM_OracleEvaluate)->Unit(benchmark::kMicrosecond);

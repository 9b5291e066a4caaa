#include "daqa/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "daqa/eval/baselines.hpp"
#include "daqa/eval/metrics.hpp"
#include "daqa/events/wav.hpp"
#include "daqa/models/saliency.hpp"
#include "daqa/nn/checkpoint.hpp"
#include "daqa/oracle/oracle.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"
#include "daqa/questions/text.hpp"

namespace daqa::pipeline {

namespace fs = std::filesystem;
using clips::SplitName;

fs::path Layout::annotations(SplitName s) const {
  return clips_dir() / ("annotations_" + std::string(clips::to_string(s)) + ".jsonl");
}
fs::path Layout::audio_dir(SplitName s) const { return clips_dir() / std::string(clips::to_string(s)); }
fs::path Layout::questions(SplitName s) const {
  return root / "questions" / ("questions_" + std::string(clips::to_string(s)) + ".jsonl");
}
fs::path Layout::generation_report(SplitName s) const {
  return root / "questions" / ("generation_" + std::string(clips::to_string(s)) + ".json");
}
fs::path Layout::features_dir(SplitName s) const { return root / "features" / std::string(clips::to_string(s)); }

SplitName split_from_string(const std::string& s) {
  for (auto n : clips::kAllSplits)
    if (clips::to_string(n) == s) return n;
  throw SchemaError("unknown split '" + s + "' (expected train, val or test)");
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"gen-events", "gen-clips", "gen-questions", "verify", "stats",
                                                 "features",   "train",     "eval",          "saliency"};
  return names;
}

namespace {

void require(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p))
    throw StageError("missing " + p.string() + "; run the '" + stage + "' stage first (daqa " + stage + ")");
}

events::Taxonomy taxonomy_of(const RunConfig& c) {
  return c.taxonomy.empty() ? events::default_taxonomy() : events::load_taxonomy(c.taxonomy);
}

questions::Catalog catalog_of(const RunConfig& c, const events::Taxonomy& t) {
  return c.catalog.empty() ? questions::default_catalog(t) : questions::load_catalog(c.catalog, t);
}

questions::SynonymTable synonyms_of(const RunConfig& c) {
  return c.synonyms.empty() ? questions::default_synonyms() : questions::load_synonyms(c.synonyms);
}

clips::SplitConfig split_config(const RunConfig& c) {
  clips::SplitConfig s;
  s.n_train = c.n_train;
  s.n_val = c.n_val;
  s.n_test = c.n_test;
  s.master_seed = c.master_seed;
  s.snr_db = c.snr_db;
  s.dedup_retry_budget = c.dedup_retry_budget;
  return s;
}

events::EventLibrary load_library(const RunConfig& c, const Layout& L) {
  require(L.library(), "gen-events");
  return events::EventLibrary::from_json(read_json(L.library()), c.manifest.empty() ? fs::path{} : c.manifest.parent_path());
}

std::vector<clips::ClipAnnotation> load_annotations(const Layout& L, SplitName s) {
  require(L.annotations(s), "gen-clips");
  return clips::read_annotations(L.annotations(s));
}

std::vector<questions::QuestionInstance> load_questions(const Layout& L, SplitName s) {
  require(L.questions(s), "gen-questions");
  return questions::read_questions(L.questions(s));
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

struct Check {
  std::string name;
  std::vector<std::string> violations;
  Json to_json() const {
    Json shown = Json::array();
    for (std::size_t i = 0; i < violations.size() && i < 50; ++i) shown.push_back(violations[i]);
    return {{"name", name}, {"ok", violations.empty()}, {"violations", violations.size()}, {"examples", shown}};
  }
};

models::Model<float> load_trained_model(const Layout& L) {
  require(L.checkpoint(), "train");
  const Json header = nn::read_checkpoint_header(L.checkpoint());
  auto model = models::Model<float>::build(models::model_config_from_json(header.at("meta").at("model")), 0);
  nn::load_checkpoint(L.checkpoint(), model.params());
  return model;
}

}  // namespace

void gen_events(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const auto lib = c.manifest.empty() ? events::build_synthetic_library(tax, c.library) : events::load_manifest(c.manifest, tax);
  write_json(L.library(), lib.to_json());
  write_json(c.output / "config.json", c.resolved);
  log << "gen-events: " << lib.instances().size() << " instances of " << lib.types().size() << " types -> "
      << L.library().string() << '\n';
}

void gen_clips(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto lib = load_library(c, L);
  const auto sc = split_config(c);
  const auto splits = clips::generate_split(sc, lib);
  Json summary = Json::object();
  for (auto s : clips::kAllSplits) {
    const auto& split = splits.get(s);
    clips::write_split(L.clips_dir(), sc, lib, split, true);
    std::size_t noisy = 0;
    double seconds = 0.0;
    for (const auto& a : split.clips) {
      noisy += a.has_noise;
      seconds += a.total_duration_s;
    }
    summary[std::string(clips::to_string(s))] = {{"clips", split.clips.size()}, {"noisy", noisy}, {"seconds", seconds}};
    log << "gen-clips: " << clips::to_string(s) << " " << split.clips.size() << " clips (" << noisy << " noisy)\n";
  }
  write_json(L.clips_dir() / "summary.json", summary);
}

void gen_questions(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const auto cat = catalog_of(c, tax);
  const auto syn = synonyms_of(c);
  const questions::EngineContext ctx{tax, cat, syn, c.synonym_p};
  questions::GenerationConfig g;
  g.attempts_train = c.attempts_train;
  g.attempts_val = c.attempts_val;
  g.attempts_test = c.attempts_test;
  g.template_draws = c.template_draws;
  g.master_seed = c.master_seed;
  g.balance = c.balance;
  for (auto s : clips::kAllSplits) {
    const auto clips = load_annotations(L, s);
    const auto out = questions::generate_questions(clips, s, g, ctx);
    questions::write_questions(L.questions(s), out.questions);
    Json templates = Json::object();
    for (const auto& t : cat.templates()) {
      if (!out.balance.declared(t.id)) continue;
      templates[t.id] = {{"total", out.balance.total(t.id)},
                         {"gap", out.balance.gap(t.id)},
                         {"histogram", out.balance.histogram(t.id)}};
    }
    write_json(L.generation_report(s), {{"split", clips::to_string(s)},
                                        {"clips", clips.size()},
                                        {"emitted", out.questions.size()},
                                        {"no_valid_binding", out.no_valid_binding},
                                        {"balance_rejected", out.balance_rejected},
                                        {"templates", templates}});
    log << "gen-questions: " << clips::to_string(s) << " " << out.questions.size() << " questions ("
        << out.no_valid_binding << " no valid binding, " << out.balance_rejected << " balance rejections)\n";
  }
}

VerifyResult verify(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const auto cat = catalog_of(c, tax);
  const questions::AnswerVocab answers(tax);

  Check annotations{"annotations", {}}, noise{"noise_half", {}}, dedup{"split_dedup", {}}, oracle_check{"oracle", {}};
  Check vocab{"answer_vocabulary", {}}, balance{"balance", {}}, ids{"question_ids", {}}, templates{"templates", {}};
  Check low{"low_resource", {}};
  if (answers.size() != 36) vocab.violations.push_back("answer vocabulary has " + std::to_string(answers.size()) + " entries");

  std::map<SplitName, std::vector<clips::ClipAnnotation>> all;
  for (auto s : clips::kAllSplits) all[s] = load_annotations(L, s);
  std::set<std::string> train_keys;
  for (const auto& a : all[SplitName::Train]) train_keys.insert(a.sequence_key());

  std::set<std::string> seen_ids;
  Json split_reports = Json::object();
  for (auto s : clips::kAllSplits) {
    const std::string sn(clips::to_string(s));
    const auto& clips = all[s];
    std::size_t noisy = 0;
    for (const auto& a : clips) {
      for (const auto& v : clips::check_annotation(a, tax)) annotations.violations.push_back(a.clip_id + ": " + v);
      noisy += a.has_noise;
      if (s != SplitName::Train && train_keys.count(a.sequence_key()))
        dedup.violations.push_back(a.clip_id + " repeats a training sequence");
    }
    if (noisy != clips.size() / 2)
      noise.violations.push_back(sn + ": " + std::to_string(noisy) + " noisy of " + std::to_string(clips.size()));

    require(L.questions(s), "gen-questions");
    const auto rows = read_jsonl(L.questions(s));
    const auto report = oracle::verify_dataset(rows, clips);
    for (const auto& m : report.mismatches)
      oracle_check.violations.push_back(sn + " " + m.question_id + ": " + std::string(oracle::to_string(m.kind)) +
                                        " expected " + m.expected + " recorded " + m.recorded);
    split_reports[sn] = oracle::to_json(report);

    const auto qs = questions::read_questions(L.questions(s));
    std::map<std::string, int> per_clip;
    for (const auto& q : qs) {
      if (!answers.index_of(q.answer)) vocab.violations.push_back(q.question_id + " answer '" + q.answer + "'");
      if (!seen_ids.insert(q.question_id).second) ids.violations.push_back("duplicate id " + q.question_id);
      auto ti = cat.index_of(q.template_id);
      if (!ti) templates.violations.push_back(q.question_id + " unknown template " + q.template_id);
      else if (cat.at(*ti).skill != q.skill) templates.violations.push_back(q.question_id + " skill mismatch");
      ++per_clip[q.clip_id];
    }
    if (c.low_resource && s == SplitName::Train) {
      for (const auto& [clip, n] : per_clip)
        if (n > 1) low.violations.push_back(clip + " has " + std::to_string(n) + " questions");
    }
    for (const auto& tb : questions::rescan_balance(qs, cat, c.balance)) {
      if (tb.past_warmup && tb.gap > c.balance.gap_threshold + 1e-12)
        balance.violations.push_back(sn + " " + tb.template_id + " gap " + fmt(tb.gap) + " over " + std::to_string(tb.total));
    }
  }

  VerifyResult r;
  Json checks = Json::array();
  for (const Check* ch : {&annotations, &noise, &dedup, &oracle_check, &vocab, &balance, &ids, &templates, &low}) {
    checks.push_back(ch->to_json());
    r.ok = r.ok && ch->violations.empty();
    log << "verify: " << (ch->violations.empty() ? "ok  " : "FAIL") << " " << ch->name;
    if (!ch->violations.empty()) log << " (" << ch->violations.size() << " violations, first: " << ch->violations.front() << ")";
    log << '\n';
  }
  r.report = {{"ok", r.ok}, {"checks", checks}, {"oracle", split_reports}};
  write_json(L.verify_report(), r.report);
  return r;
}

void stats(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const auto cat = catalog_of(c, tax);
  const questions::AnswerVocab answers(tax);
  std::map<SplitName, std::vector<questions::QuestionInstance>> qs;
  std::map<SplitName, std::vector<clips::ClipAnnotation>> clips;
  for (auto s : clips::kAllSplits) {
    qs[s] = load_questions(L, s);
    clips[s] = load_annotations(L, s);
  }
  const auto splits = std::vector<SplitName>(std::begin(clips::kAllSplits), std::end(clips::kAllSplits));
  auto header = [&](std::ostringstream& o, const std::string& first) {
    o << first;
    for (auto s : splits) o << '\t' << clips::to_string(s);
    o << '\n';
  };

  std::ostringstream ans;
  header(ans, "answer");
  for (const auto& label : answers.labels()) {
    ans << label;
    for (auto s : splits) ans << '\t' << std::count_if(qs[s].begin(), qs[s].end(), [&](const auto& q) { return q.answer == label; });
    ans << '\n';
  }

  std::map<std::size_t, std::map<SplitName, int>> qlen;
  std::map<int, std::map<SplitName, int>> clen, nevents;
  for (auto s : splits) {
    for (const auto& q : qs[s]) ++qlen[q.tokens.size()][s];
    for (const auto& a : clips[s]) {
      ++clen[static_cast<int>(std::floor(a.total_duration_s))][s];
      ++nevents[static_cast<int>(a.events.size())][s];
    }
  }
  auto table = [&](const auto& m, const std::string& first) {
    std::ostringstream o;
    header(o, first);
    for (const auto& [k, row] : m) {
      o << k;
      for (auto s : splits) {
        auto it = row.find(s);
        o << '\t' << (it == row.end() ? 0 : it->second);
      }
      o << '\n';
    }
    return o.str();
  };

  std::ostringstream tmpl;
  tmpl << "template_id\tskill";
  for (auto s : splits) tmpl << '\t' << clips::to_string(s);
  tmpl << '\n';
  for (const auto& t : cat.templates()) {
    tmpl << t.id << '\t' << questions::to_string(t.skill);
    for (auto s : splits) tmpl << '\t' << std::count_if(qs[s].begin(), qs[s].end(), [&](const auto& q) { return q.template_id == t.id; });
    tmpl << '\n';
  }

  std::ostringstream tans;
  tans << "split\ttemplate_id\tanswer\tcount\ttemplate_total\tgap\n";
  Json gaps = Json::object();
  for (auto s : splits) {
    const auto scan = questions::rescan_balance(qs[s], cat, c.balance);
    std::map<std::string, double> gap_of;
    for (const auto& tb : scan) gap_of[tb.template_id] = tb.gap;
    double worst = 0.0, worst_past = 0.0;
    for (const auto& tb : scan) {
      worst = std::max(worst, tb.gap);
      if (tb.past_warmup) worst_past = std::max(worst_past, tb.gap);
    }
    gaps[std::string(clips::to_string(s))] = {{"max_gap", worst}, {"max_gap_past_warmup", worst_past}};
    for (const auto& t : cat.templates()) {
      std::map<std::string, int> h;
      int total = 0;
      for (const auto& q : qs[s])
        if (q.template_id == t.id) {
          ++h[q.answer];
          ++total;
        }
      if (total == 0) continue;
      for (const auto& label : t.support)
        tans << clips::to_string(s) << '\t' << t.id << '\t' << label << '\t' << h[label] << '\t' << total << '\t'
             << gap_of[t.id] << '\n';
    }
  }

  const auto dir = L.stats_dir();
  write_text(dir / "answers.tsv", ans.str());
  write_text(dir / "question_lengths.tsv", table(qlen, "tokens"));
  write_text(dir / "clip_lengths.tsv", table(clen, "seconds"));
  write_text(dir / "events_per_clip.tsv", table(nevents, "events"));
  write_text(dir / "templates.tsv", tmpl.str());
  write_text(dir / "template_answers.tsv", tans.str());
  Json summary = {{"balance", gaps}};
  for (auto s : splits)
    summary["counts"][std::string(clips::to_string(s))] = {{"clips", clips[s].size()}, {"questions", qs[s].size()}};
  write_json(dir / "summary.json", summary);
  log << "stats: tables written to " << dir.string() << '\n';
}

void extract_features(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  std::map<SplitName, std::vector<features::FeatureMatrix>> feats;
  std::map<SplitName, std::vector<std::string>> ids;
  for (auto s : clips::kAllSplits) {
    for (const auto& a : load_annotations(L, s)) {
      const auto wav_path = L.audio_dir(s) / (a.clip_id + ".wav");
      require(wav_path, "gen-clips");
      const auto wav = events::read_wav(wav_path);
      feats[s].push_back(features::mfsc(wav.samples, wav.sample_rate, c.mfsc));
      ids[s].push_back(a.clip_id);
    }
  }
  if (feats[SplitName::Train].empty()) throw StageError("features: the training split has no clips");
  const auto stats = features::fit_normalizer(feats[SplitName::Train]);
  write_json(L.norm_stats(), features::to_json(stats));
  for (auto s : clips::kAllSplits) {
    for (std::size_t i = 0; i < feats[s].size(); ++i) {
      features::apply_normalizer(stats, feats[s][i]);
      features::write_features(L.features_dir(s), ids[s][i], feats[s][i], true);
    }
    log << "features: " << clips::to_string(s) << " " << feats[s].size() << " clips\n";
  }
}

models::QaDataset load_qa_dataset(const RunConfig& c, SplitName split, const models::Vocabulary& vocab,
                                  const questions::AnswerVocab& answers) {
  const Layout L{c.output};
  const auto qs = load_questions(L, split);
  require(L.norm_stats(), "features");
  models::QaDataset d;
  d.n_mels = c.mfsc.n_mels;
  std::map<std::string, std::size_t> clip_index;
  for (const auto& q : qs) {
    auto it = clip_index.find(q.clip_id);
    if (it == clip_index.end()) {
      const auto dir = L.features_dir(split);
      require(dir / (q.clip_id + ".f32"), "features");
      auto m = features::read_features(dir, q.clip_id);
      if (static_cast<int>(m.dims) != d.n_mels)
        throw ShapeError("features of " + q.clip_id + " have " + std::to_string(m.dims) + " dims, config says " + std::to_string(d.n_mels));
      it = clip_index.emplace(q.clip_id, d.features.size()).first;
      d.frames.push_back(static_cast<int>(m.frames));
      d.features.push_back(std::move(m.data));
    }
    d.examples.push_back({it->second, vocab.encode(q.tokens), static_cast<int>(answers.require(q.answer))});
  }
  return d;
}

models::TrainResult train_model(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const questions::AnswerVocab answers(tax);
  const auto train_qs = load_questions(L, SplitName::Train);
  std::vector<std::vector<std::string>> tokens;
  for (const auto& q : train_qs) tokens.push_back(q.tokens);
  const auto vocab = models::Vocabulary::build(tokens);
  write_json(L.vocabulary(), vocab.to_json());

  const auto train_set = load_qa_dataset(c, SplitName::Train, vocab, answers);
  const auto val_set = load_qa_dataset(c, SplitName::Validation, vocab, answers);
  auto mc = c.model;
  mc.vocab_size = vocab.size();
  mc.classes = static_cast<int>(answers.size());
  auto model = models::Model<float>::build(mc, derive_seed(c.master_seed, "model"));
  log << "train: " << models::to_string(mc.kind) << " with " << model.parameter_count() << " parameters, "
      << train_set.examples.size() << " training questions\n";

  models::TrainConfig tc;
  tc.adam = c.adam;
  tc.batch_size = c.batch_size;
  tc.epochs = c.epochs;
  tc.seed = c.master_seed;
  tc.checkpoint = L.checkpoint();
  tc.log = L.model_dir() / "train_log.jsonl";
  const auto res = models::train(model, train_set, val_set.examples.empty() ? nullptr : &val_set, tc);
  for (const auto& e : res.epochs)
    log << "train: epoch " << e.epoch << " loss " << fmt(e.train_loss) << " acc " << fmt(e.train_acc)
        << (e.val_acc >= 0 ? " val " + fmt(e.val_acc) : std::string()) << '\n';
  write_json(L.model_dir() / "model.json", {{"model", models::to_json(mc)},
                                            {"parameters", model.parameter_count()},
                                            {"best_epoch", res.best_epoch},
                                            {"best_val_acc", res.best_val_acc}});
  return res;
}

Json evaluate_all(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  const auto tax = taxonomy_of(c);
  const auto cat = catalog_of(c, tax);
  const questions::AnswerVocab answers(tax);
  const auto split = split_from_string(c.eval_split);
  const auto train_qs = load_questions(L, SplitName::Train);
  const auto test_qs = load_questions(L, split);

  Json results = Json::object();
  auto record = [&](const std::string& name, const std::vector<int>& pred) {
    const auto m = eval::evaluate(pred, test_qs, answers);
    write_json(L.eval_dir() / (name + ".json"), eval::to_json(m, answers));
    write_text(L.eval_dir() / (name + "_templates.tsv"), eval::per_template_tsv(m, cat));
    Json skills = Json::object();
    for (const auto& [s, a] : m.per_skill) skills[std::string(questions::to_string(s))] = a.value();
    results[name] = {{"overall", m.overall.value()}, {"per_skill", skills}};
    log << "eval: " << name << " " << fmt(100.0 * m.overall.value()) << "%\n";
  };

  for (auto k : eval::kAllBaselines) {
    auto b = eval::Baseline::fit(k, train_qs, cat, answers, c.master_seed);
    record(eval::to_string(k), b.predict_all(test_qs));
  }
  eval::LogisticConfig lc;
  lc.adam = c.adam;
  lc.batch_size = c.batch_size;
  lc.max_epochs = c.logistic_max_epochs;
  lc.seed = c.master_seed;
  for (auto f : {eval::LogisticFeatures::TemplateOneHot, eval::LogisticFeatures::BagOfWords}) {
    const auto lm = eval::LogisticModel::fit(f, train_qs, answers, lc);
    record("logistic_" + eval::to_string(f), lm.predict_all(test_qs));
  }
  if (c.eval_model) {
    const auto model = load_trained_model(L);
    require(L.vocabulary(), "train");
    const auto vocab = models::Vocabulary::from_json(read_json(L.vocabulary()));
    const auto data = load_qa_dataset(c, split, vocab, answers);
    record("model_" + models::to_string(model.config().kind), models::predict(model, data, c.batch_size));
  }
  const Json summary = {{"split", c.eval_split}, {"questions", test_qs.size()}, {"results", results}};
  write_json(L.eval_dir() / "summary.json", summary);
  return summary;
}

void saliency_maps(const RunConfig& c, std::ostream& log) {
  const Layout L{c.output};
  auto model = load_trained_model(L);
  require(L.vocabulary(), "train");
  const auto vocab = models::Vocabulary::from_json(read_json(L.vocabulary()));
  const auto tax = taxonomy_of(c);
  const questions::AnswerVocab answers(tax);
  const auto split = split_from_string(c.saliency_split);
  const auto qs = load_questions(L, split);

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < qs.size() && static_cast<int>(chosen.size()) < c.saliency_count; ++i)
    if (qs[i].skill == questions::Skill::Query) chosen.push_back(i);
  for (std::size_t i = 0; i < qs.size() && static_cast<int>(chosen.size()) < c.saliency_count; ++i)
    if (qs[i].skill != questions::Skill::Query) chosen.push_back(i);

  Json index = Json::array();
  for (std::size_t i : chosen) {
    const auto& q = qs[i];
    const auto feats = features::read_features(L.features_dir(split), q.clip_id);
    const auto map = models::saliency(model, feats.data, static_cast<int>(feats.frames), vocab.encode(q.tokens));
    features::FeatureMatrix out;
    out.frames = static_cast<std::size_t>(map.frames);
    out.dims = static_cast<std::size_t>(map.dims);
    out.data = map.data;
    features::write_features(L.saliency_dir(), q.question_id, out, false);
    index.push_back({{"question_id", q.question_id},
                     {"clip_id", q.clip_id},
                     {"template_id", q.template_id},
                     {"answer", q.answer},
                     {"predicted", answers.label(static_cast<std::size_t>(map.predicted))}});
  }
  write_json(L.saliency_dir() / "index.json", index);
  log << "saliency: " << chosen.size() << " maps written to " << L.saliency_dir().string() << '\n';
}

int run_stage(const std::string& name, const RunConfig& c, std::ostream& log) {
  if (name == "gen-events") gen_events(c, log);
  else if (name == "gen-clips") gen_clips(c, log);
  else if (name == "gen-questions") gen_questions(c, log);
  else if (name == "verify") return verify(c, log).ok ? 0 : 1;
  else if (name == "stats") stats(c, log);
  else if (name == "features") extract_features(c, log);
  else if (name == "train") train_model(c, log);
  else if (name == "eval") evaluate_all(c, log);
  else if (name == "saliency") saliency_maps(c, log);
  else throw SchemaError("unknown stage '" + name + "'");
  return 0;
}

}  // namespace daqa::pipeline

#include "daqa/questions/engine.hpp"

#include <set>

#include "daqa/common/error.hpp"
#include "daqa/oracle/oracle.hpp"
#include "daqa/questions/families.hpp"

namespace daqa::questions {

Json to_json(const QuestionInstance& q) {
  return {{"question_id", q.question_id},
          {"clip_id", q.clip_id},
          {"template_id", q.template_id},
          {"skill", std::string(to_string(q.skill))},
          {"text_tokens", q.tokens},
          {"ast", to_json(q.ast)},
          {"answer", q.answer}};
}

QuestionInstance question_from_json(const Json& j) {
  try {
    QuestionInstance q;
    q.question_id = j.at("question_id").get<std::string>();
    q.clip_id = j.at("clip_id").get<std::string>();
    q.template_id = j.at("template_id").get<std::string>();
    q.skill = skill_from_string(j.at("skill").get<std::string>());
    q.tokens = j.at("text_tokens").get<std::vector<std::string>>();
    q.ast = ast_from_json(j.at("ast"));
    q.answer = j.at("answer").get<std::string>();
    return q;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("question record: ") + e.what());
  }
}

std::vector<QuestionInstance> read_questions(const std::filesystem::path& path) {
  std::vector<QuestionInstance> out;
  for (const auto& row : read_jsonl(path)) out.push_back(question_from_json(row));
  return out;
}

void write_questions(const std::filesystem::path& path, const std::vector<QuestionInstance>& questions) {
  std::vector<Json> rows;
  rows.reserve(questions.size());
  for (const auto& q : questions) rows.push_back(to_json(q));
  write_jsonl(path, rows);
}

std::string_view to_string(Rejection r) {
  return r == Rejection::NoValidBinding ? "NoValidBinding" : "BalanceRejected";
}

namespace {

// Source slots that appear as a ByType reference need a type occurring once.
void collect_unique_slots(const Json& node, std::set<std::string>& out) {
  if (node.is_object()) {
    if (node.value("op", std::string()) == "ByType" && node.contains("type")) {
      const auto& s = node["type"].get_ref<const std::string&>();
      if (!s.empty() && s[0] == '$') out.insert(s.substr(1));
    }
    for (const auto& [k, v] : node.items()) collect_unique_slots(v, out);
  } else if (node.is_array()) {
    for (const auto& v : node) collect_unique_slots(v, out);
  }
}

std::vector<std::string> slot_domain(const QuestionTemplate& t, const Placeholder& p,
                                     const clips::ClipAnnotation& clip, const events::Taxonomy& taxonomy,
                                     const std::set<std::string>& unique_slots) {
  std::vector<std::string> out;
  switch (p.kind) {
    case PlaceholderKind::Source:
      for (const auto& ty : taxonomy.types()) {
        if (unique_slots.count(p.name)) {
          int c = 0;
          for (const auto& e : clip.events) c += e.type_id == ty.id;
          if (c != 1) continue;
        }
        out.push_back(ty.id);
      }
      break;
    case PlaceholderKind::RelOrder:
      out = {"before", "after"};
      break;
    case PlaceholderKind::Ordinal: {
      const int n = std::min<int>(static_cast<int>(clip.events.size()), clips::kMaxEvents);
      for (int i = 1; i <= n; ++i) out.push_back(std::to_string(i));
      if (n > 0) out.push_back("last");
      break;
    }
    case PlaceholderKind::Attribute:
    case PlaceholderKind::Relation:
      out = p.values;
      break;
    default:
      throw SchemaError("template '" + t.id + "': unsupported placeholder kind");
  }
  return out;
}

}  // namespace

std::vector<std::pair<Bindings, std::string>> valid_bindings(const QuestionTemplate& t,
                                                             const clips::ClipAnnotation& clip,
                                                             const events::Taxonomy& taxonomy) {
  const Family* family = find_family(t.family);
  if (!family) throw SchemaError("template '" + t.id + "': unknown family '" + t.family + "'");

  std::set<std::string> unique_slots;
  collect_unique_slots(t.semantics, unique_slots);

  std::vector<std::string> names;
  std::vector<std::vector<std::string>> domains;
  for (const auto& p : t.placeholders) {
    if (p.kind == PlaceholderKind::Action) continue;
    names.push_back(p.name);
    domains.push_back(slot_domain(t, p, clip, taxonomy, unique_slots));
    if (domains.back().empty()) return {};
  }

  std::vector<std::pair<Bindings, std::string>> out;
  std::vector<std::size_t> odo(names.size(), 0);
  Bindings b;
  while (true) {
    for (std::size_t k = 0; k < names.size(); ++k) b[names[k]] = domains[k][odo[k]];
    bool ok = true;
    for (const auto& [x, y] : t.distinct) ok = ok && b.at(x) != b.at(y);
    if (ok) {
      if (auto answer = (*family)(b, clip)) out.emplace_back(b, std::move(*answer));
    }
    std::size_t k = 0;
    while (k < odo.size() && ++odo[k] == domains[k].size()) odo[k++] = 0;
    if (k == odo.size()) break;
  }
  return out;
}

Instantiation instantiate(const QuestionTemplate& t, const clips::ClipAnnotation& clip, Rng& rng,
                          BalanceState& balance, const EngineContext& ctx) {
  Instantiation result;
  auto pool = valid_bindings(t, clip, ctx.taxonomy);
  if (pool.empty()) {
    result.rejection = Rejection::NoValidBinding;
    return result;
  }
  auto& [bindings, answer] = pool[uniform_index(rng, pool.size())];
  if (!balance.declared(t.id)) balance.declare(t.id, t.support);
  if (!balance.accept(t.id, answer)) {
    result.rejection = Rejection::BalanceRejected;
    return result;
  }
  QuestionInstance q;
  q.clip_id = clip.clip_id;
  q.template_id = t.id;
  q.skill = t.skill;
  q.tokens = realize_text(t, bindings, rng, ctx.taxonomy, ctx.synonyms, ctx.synonym_p);
  q.ast = bind_semantics(t, bindings);
  q.answer = std::move(answer);
  q.bindings = std::move(bindings);
  result.question = std::move(q);
  return result;
}

int GenerationConfig::attempts(clips::SplitName s) const {
  switch (s) {
    case clips::SplitName::Train: return attempts_train;
    case clips::SplitName::Validation: return attempts_val;
    case clips::SplitName::Test: return attempts_test;
  }
  return 0;
}

SplitQuestions generate_questions(const std::vector<clips::ClipAnnotation>& clips, clips::SplitName split,
                                  const GenerationConfig& config, const EngineContext& ctx) {
  SplitQuestions out{split, {}, 0, 0, BalanceState(config.balance)};
  const auto& templates = ctx.catalog.templates();
  if (templates.empty()) throw GenerationError("empty catalog");
  const std::string stream = "questions:" + std::string(clips::to_string(split));

  for (std::size_t c = 0; c < clips.size(); ++c) {
    const auto& clip = clips[c];
    Rng rng(derive_seed(config.master_seed, stream, c));
    int emitted = 0;
    for (int attempt = 0; attempt < config.attempts(split); ++attempt) {
      for (int draw = 0; draw < config.template_draws; ++draw) {
        const auto& t = templates[uniform_index(rng, templates.size())];
        Instantiation inst = instantiate(t, clip, rng, out.balance, ctx);
        if (!inst.question) {
          (*inst.rejection == Rejection::NoValidBinding ? out.no_valid_binding : out.balance_rejected)++;
          continue;
        }
        QuestionInstance& q = *inst.question;
        q.question_id = clip.clip_id + "_q" + std::to_string(emitted++);
        const auto expected = oracle::evaluate(q.ast, clip);
        if (!expected || *expected != q.answer)
          throw GenerationError("oracle disagreement on " + q.question_id + " (template " + q.template_id +
                                "): engine '" + q.answer + "', oracle '" + expected.value_or("<invalid>") + "'");
        out.questions.push_back(std::move(q));
        break;
      }
    }
  }
  return out;
}

std::vector<TemplateBalance> rescan_balance(const std::vector<QuestionInstance>& questions, const Catalog& catalog,
                                            const BalanceConfig& config) {
  std::map<std::string, std::map<std::string, int>> hist;
  std::map<std::string, int> totals;
  for (const auto& q : questions) {
    ++hist[q.template_id][q.answer];
    ++totals[q.template_id];
  }
  std::vector<TemplateBalance> out;
  for (const auto& t : catalog.templates()) {
    TemplateBalance tb;
    tb.template_id = t.id;
    tb.total = totals[t.id];
    tb.gap = support_gap(hist[t.id], t.support, tb.total);
    tb.past_warmup = tb.total >= config.warmup;
    out.push_back(tb);
  }
  return out;
}

}  // namespace daqa::questions

#include "daqa/eval/metrics.hpp"

#include <sstream>

#include "daqa/common/error.hpp"

namespace daqa::eval {

Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& gold,
                 const std::vector<std::string>& template_ids, const std::vector<questions::Skill>& skills,
                 std::size_t classes) {
  if (predicted.size() != gold.size() || template_ids.size() != gold.size() || skills.size() != gold.size())
    throw ShapeError("evaluate: " + std::to_string(predicted.size()) + " predictions for " + std::to_string(gold.size()) +
                     " gold answers (" + std::to_string(template_ids.size()) + " template ids, " +
                     std::to_string(skills.size()) + " skills)");
  Metrics m;
  m.confusion_counts.assign(classes, std::vector<std::size_t>(classes, 0));
  for (auto s : questions::kAllSkills) m.per_skill[s];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = gold[i], p = predicted[i];
    if (g < 0 || static_cast<std::size_t>(g) >= classes || p < 0 || static_cast<std::size_t>(p) >= classes)
      throw ShapeError("evaluate: label outside [0, " + std::to_string(classes) + ")");
    const bool ok = g == p;
    for (Accuracy* a : {&m.overall, &m.per_skill[skills[i]], &m.per_template[template_ids[i]]}) {
      ++a->count;
      a->correct += ok;
    }
    ++m.confusion_counts[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
  }
  m.confusion.assign(classes, std::vector<double>(classes, 0.0));
  for (std::size_t r = 0; r < classes; ++r) {
    std::size_t total = 0;
    for (auto c : m.confusion_counts[r]) total += c;
    if (total == 0) continue;
    for (std::size_t c = 0; c < classes; ++c)
      m.confusion[r][c] = static_cast<double>(m.confusion_counts[r][c]) / static_cast<double>(total);
  }
  return m;
}

Metrics evaluate(const std::vector<int>& predicted, const std::vector<questions::QuestionInstance>& qs,
                 const questions::AnswerVocab& vocab) {
  std::vector<int> gold;
  std::vector<std::string> ids;
  std::vector<questions::Skill> skills;
  for (const auto& q : qs) {
    gold.push_back(static_cast<int>(vocab.require(q.answer)));
    ids.push_back(q.template_id);
    skills.push_back(q.skill);
  }
  return evaluate(predicted, gold, ids, skills, vocab.size());
}

namespace {

Json acc_json(const Accuracy& a) { return {{"count", a.count}, {"correct", a.correct}, {"accuracy", a.value()}}; }

}  // namespace

Json to_json(const Metrics& m, const questions::AnswerVocab& vocab) {
  Json skills = Json::object();
  for (const auto& [s, a] : m.per_skill) skills[std::string(questions::to_string(s))] = acc_json(a);
  Json templates = Json::object();
  for (const auto& [t, a] : m.per_template) templates[t] = acc_json(a);
  return {{"overall", acc_json(m.overall)},
          {"per_skill", skills},
          {"per_template", templates},
          {"labels", vocab.labels()},
          {"confusion_counts", m.confusion_counts},
          {"confusion", m.confusion}};
}

std::string per_template_tsv(const Metrics& m, const questions::Catalog& catalog) {
  std::ostringstream out;
  out << "template_id\tskill\tcount\tcorrect\taccuracy\n";
  for (const auto& t : catalog.templates()) {
    auto it = m.per_template.find(t.id);
    const Accuracy a = it == m.per_template.end() ? Accuracy{} : it->second;
    out << t.id << '\t' << questions::to_string(t.skill) << '\t' << a.count << '\t' << a.correct << '\t' << a.value() << '\n';
  }
  return out.str();
}

}  // namespace daqa::eval

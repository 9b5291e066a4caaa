#pragma once

#include <map>
#include <string>
#include <vector>

#include "daqa/questions/catalog.hpp"
#include "daqa/questions/engine.hpp"

namespace daqa::eval {

struct Accuracy {
  std::size_t count = 0;
  std::size_t correct = 0;
  double value() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

struct Metrics {
  Accuracy overall;
  std::map<questions::Skill, Accuracy> per_skill;
  std::map<std::string, Accuracy> per_template;
  /// confusion_counts[gold][predicted]; confusion is row-normalized (rows of
  /// absent gold classes are all zero).
  std::vector<std::vector<std::size_t>> confusion_counts;
  std::vector<std::vector<double>> confusion;
};

/// Throws ShapeError when the lists differ in length.
Metrics evaluate(const std::vector<int>& predicted, const std::vector<int>& gold,
                 const std::vector<std::string>& template_ids, const std::vector<questions::Skill>& skills,
                 std::size_t classes);

/// Convenience form reading gold answers, templates and skills off the questions.
Metrics evaluate(const std::vector<int>& predicted, const std::vector<questions::QuestionInstance>& questions,
                 const questions::AnswerVocab& vocab);

Json to_json(const Metrics& m, const questions::AnswerVocab& vocab);

/// template_id, skill, count, correct, accuracy; one row per template.
std::string per_template_tsv(const Metrics& m, const questions::Catalog& catalog);

}  // namespace daqa::eval

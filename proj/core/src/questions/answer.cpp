#include "daqa/questions/answer.hpp"

#include "daqa/common/error.hpp"

namespace daqa::questions {

AnswerVocab::AnswerVocab(const events::Taxonomy& taxonomy) {
  labels_ = {"yes", "no"};
  for (const auto& t : taxonomy.types()) labels_.push_back(t.id);
  nothing_ = labels_.size();
  labels_.push_back("nothing");
  first_int_ = labels_.size();
  for (int n = 0; n <= kMaxCountAnswer; ++n) labels_.push_back(std::to_string(n));
}

AnswerVocab::AnswerVocab() : AnswerVocab(events::default_taxonomy()) {}

std::optional<std::size_t> AnswerVocab::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  return std::nullopt;
}

std::size_t AnswerVocab::require(std::string_view label) const {
  auto i = index_of(label);
  if (!i) throw SchemaError("answer '" + std::string(label) + "' is not in the answer vocabulary");
  return *i;
}

std::size_t AnswerVocab::event_type(std::string_view id) const {
  for (std::size_t i = 2; i < nothing_; ++i)
    if (labels_[i] == id) return i;
  throw SchemaError("event type '" + std::string(id) + "' is not in the answer vocabulary");
}

std::size_t AnswerVocab::integer(int n) const {
  if (n < 0 || n > kMaxCountAnswer)
    throw GenerationError("count answer " + std::to_string(n) + " outside 0.." + std::to_string(kMaxCountAnswer));
  return first_int_ + static_cast<std::size_t>(n);
}

}  // namespace daqa::questions

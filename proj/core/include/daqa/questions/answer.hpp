#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "daqa/events/taxonomy.hpp"

namespace daqa::questions {

/// Fixed-order answer vocabulary:
///   0 yes, 1 no, 2..(2+T-1) event type ids in taxonomy order, then "nothing",
///   then the integers 0..12. With the 20-type taxonomy this is 36 entries.
class AnswerVocab {
 public:
  explicit AnswerVocab(const events::Taxonomy& taxonomy);
  AnswerVocab();  // default taxonomy

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index_of(std::string_view label) const;
  std::size_t require(std::string_view label) const;

  std::size_t yes() const { return 0; }
  std::size_t no() const { return 1; }
  std::size_t boolean(bool b) const { return b ? 0 : 1; }
  std::size_t event_type(std::string_view id) const;
  std::size_t nothing() const { return nothing_; }
  /// Integer answer; throws GenerationError for n outside [0, 12] (never clamps).
  std::size_t integer(int n) const;

  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::size_t nothing_ = 0;
  std::size_t first_int_ = 0;
};

inline constexpr int kMaxCountAnswer = 12;

}  // namespace daqa::questions

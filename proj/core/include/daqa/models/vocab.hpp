#pragma once

#include <map>
#include <string>
#include <vector>

#include "daqa/common/io.hpp"

namespace daqa::models {

/// Token index built from training questions. Index 0 is padding, 1 unknown.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  static Vocabulary build(const std::vector<std::vector<std::string>>& questions);

  int size() const { return static_cast<int>(words_.size()); }
  int index(const std::string& token) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  const std::vector<std::string>& words() const { return words_; }

  Json to_json() const;
  static Vocabulary from_json(const Json& j);

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> index_;
};

}  // namespace daqa::models

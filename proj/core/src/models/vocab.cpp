#include "daqa/models/vocab.hpp"

#include <set>

#include "daqa/common/error.hpp"

namespace daqa::models {

Vocabulary::Vocabulary() : words_{"<pad>", "<unk>"} {
  index_["<pad>"] = kPad;
  index_["<unk>"] = kUnk;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& questions) {
  std::set<std::string> seen;
  for (const auto& q : questions) seen.insert(q.begin(), q.end());
  Vocabulary v;
  for (const auto& w : seen) {
    if (v.index_.count(w)) continue;
    v.index_[w] = v.size();
    v.words_.push_back(w);
  }
  return v;
}

int Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

Json Vocabulary::to_json() const { return Json{{"words", words_}}; }

Vocabulary Vocabulary::from_json(const Json& j) {
  Vocabulary v;
  const auto words = j.at("words").get<std::vector<std::string>>();
  if (words.size() < 2 || words[0] != "<pad>" || words[1] != "<unk>")
    throw SchemaError("vocabulary must start with <pad>, <unk>");
  for (std::size_t i = 2; i < words.size(); ++i) {
    if (v.index_.count(words[i])) throw SchemaError("duplicate vocabulary word " + words[i]);
    v.index_[words[i]] = v.size();
    v.words_.push_back(words[i]);
  }
  return v;
}

}  // namespace daqa::models

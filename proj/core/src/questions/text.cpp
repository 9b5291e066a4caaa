#include "daqa/questions/text.hpp"

#include <cctype>
#include <sstream>

#include "daqa/common/error.hpp"

namespace daqa::questions {

SynonymTable load_synonyms(const std::filesystem::path& path) {
  const Json j = read_json(path);
  if (!j.is_object()) throw SchemaError(path.string() + ": synonym table must be an object");
  SynonymTable table;
  for (const auto& [word, alts] : j.items()) {
    auto list = alts.get<std::vector<std::string>>();
    if (list.empty()) throw SchemaError(path.string() + ": no synonyms for '" + word + "'");
    table.emplace(word, std::move(list));
  }
  return table;
}

SynonymTable default_synonyms() { return load_synonyms(events::default_data_dir() / "synonyms.json"); }

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  auto strip = [](char c) { return c == '?' || c == '.' || c == ','; };
  while (in >> tok) {
    std::size_t a = 0, b = tok.size();
    while (a < b && strip(tok[a])) ++a;
    while (b > a && strip(tok[b - 1])) --b;
    if (a == b) continue;
    std::string w = tok.substr(a, b - a);
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(w));
  }
  return out;
}

std::string fill_phrasing(std::string_view phrasing, const QuestionTemplate& t, const Bindings& b,
                          const events::Taxonomy& taxonomy) {
  std::string out;
  std::size_t i = 0;
  while (i < phrasing.size()) {
    if (phrasing[i] != '<') {
      out += phrasing[i++];
      continue;
    }
    const std::size_t close = phrasing.find('>', i);
    if (close == std::string_view::npos) throw SchemaError("template '" + t.id + "': unterminated placeholder");
    const std::string name(phrasing.substr(i + 1, close - i - 1));
    const Placeholder* p = t.placeholder(name);
    if (!p) throw SchemaError("template '" + t.id + "': undeclared placeholder '" + name + "'");
    switch (p->kind) {
      case PlaceholderKind::Source:
        out += taxonomy.by_id(b.at(name)).source;
        break;
      case PlaceholderKind::Action:
        out += taxonomy.by_id(b.at("S" + name.substr(1))).action;
        break;
      case PlaceholderKind::Ordinal:
        out += ordinal_word(b.at(name));
        break;
      default:
        out += b.at(name);
    }
    i = close + 1;
  }
  return out;
}

std::vector<std::string> realize_text(const QuestionTemplate& t, const Bindings& b, Rng& rng,
                                      const events::Taxonomy& taxonomy, const SynonymTable& synonyms,
                                      double synonym_p) {
  const std::string& phrasing = t.phrasings[uniform_index(rng, t.phrasings.size())];
  std::vector<std::string> out;
  for (auto& w : tokenize(fill_phrasing(phrasing, t, b, taxonomy))) {
    const auto it = synonyms.find(w);
    if (it != synonyms.end() && bernoulli(rng, synonym_p)) {
      const std::string& alt = it->second[uniform_index(rng, it->second.size())];
      for (auto& piece : tokenize(alt)) out.push_back(std::move(piece));
    } else {
      out.push_back(std::move(w));
    }
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) {
    if (!s.empty()) s += ' ';
    s += t;
  }
  return s;
}

}  // namespace daqa::questions

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "daqa/common/rng.hpp"
#include "daqa/events/taxonomy.hpp"
#include "daqa/questions/catalog.hpp"

namespace daqa::questions {

/// word -> replacement phrases (a phrase may span several words).
using SynonymTable = std::map<std::string, std::vector<std::string>, std::less<>>;

SynonymTable load_synonyms(const std::filesystem::path& path);
SynonymTable default_synonyms();

/// Lowercases, splits on whitespace and strips '?', '.' and ',' from token edges.
std::vector<std::string> tokenize(std::string_view text);

/// Fills `phrasing` with the bound values ("<S> <A>" -> source/action words).
std::string fill_phrasing(std::string_view phrasing, const QuestionTemplate& t, const Bindings& b,
                          const events::Taxonomy& taxonomy);

/// Picks a phrasing uniformly, fills it, tokenizes, then replaces each word
/// that has synonyms with probability `synonym_p`.
std::vector<std::string> realize_text(const QuestionTemplate& t, const Bindings& b, Rng& rng,
                                      const events::Taxonomy& taxonomy, const SynonymTable& synonyms,
                                      double synonym_p = 0.5);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace daqa::questions

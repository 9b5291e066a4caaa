#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "daqa/common/io.hpp"
#include "daqa/events/taxonomy.hpp"
#include "daqa/questions/answer.hpp"
#include "daqa/questions/ast.hpp"

namespace daqa::questions {

enum class Skill { Exist, Query, Count, Compare, CompareInteger };
std::string_view to_string(Skill s);
Skill skill_from_string(std::string_view s);
inline constexpr Skill kAllSkills[] = {Skill::Exist, Skill::Query, Skill::Count, Skill::Compare,
                                       Skill::CompareInteger};

enum class PlaceholderKind { Source, Action, RelOrder, Ordinal, Attribute, Relation, Count };
std::string_view to_string(PlaceholderKind k);
PlaceholderKind placeholder_kind_from_string(std::string_view s);

struct Placeholder {
  std::string name;
  PlaceholderKind kind = PlaceholderKind::Source;
  std::vector<std::string> values;  // explicit value words (Attribute, Relation)
};

/// Placeholder name -> bound value. Source slots hold a type id (their paired
/// Action slot is not stored), RelOrder "before"/"after", Ordinal "1".."12" or
/// "last", Attribute a comparative or superlative word, Relation "more"/"fewer".
using Bindings = std::map<std::string, std::string>;

struct QuestionTemplate {
  std::string id;
  Skill skill = Skill::Exist;
  std::string family;
  std::vector<Placeholder> placeholders;
  std::vector<std::string> phrasings;
  Json semantics;                     // AST pattern with "$NAME" slots
  std::vector<std::string> support;   // answer labels the balance rule runs over
  std::vector<std::pair<std::string, std::string>> distinct;
  bool requires_temporal = false;

  const Placeholder* placeholder(std::string_view name) const;
  /// Names of the slots that get bound (Source, RelOrder, Ordinal, Attribute, Relation).
  std::vector<std::string> slots() const;
};

class Catalog {
 public:
  Catalog() = default;
  Catalog(std::vector<QuestionTemplate> templates, const events::Taxonomy& taxonomy);

  const std::vector<QuestionTemplate>& templates() const { return templates_; }
  std::size_t size() const { return templates_.size(); }
  const QuestionTemplate& at(std::size_t i) const { return templates_.at(i); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  const QuestionTemplate& by_id(std::string_view id) const;

 private:
  std::vector<QuestionTemplate> templates_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Parses and validates a catalog document. Throws SchemaError on duplicate
/// ids, undeclared or unused placeholders, unknown families, patterns that
/// fail to instantiate (including mixed duration/loudness nodes), depth > 4,
/// skill/root mismatch, or support labels outside the answer vocabulary.
Catalog catalog_from_json(const Json& j, const events::Taxonomy& taxonomy);
Catalog load_catalog(const std::filesystem::path& path, const events::Taxonomy& taxonomy);
Catalog default_catalog(const events::Taxonomy& taxonomy);

/// Replaces "$NAME" slots of the template's semantics with bound values.
QuestionAst bind_semantics(const QuestionTemplate& t, const Bindings& b);

/// True iff the AST uses ordinals or before/after references.
bool uses_temporal(const QuestionAst& ast);

/// Ordinal word for 1..12 and "last".
std::string ordinal_word(std::string_view ordinal);

/// Attribute placeholder words: comparatives and superlatives.
struct AttributeWord {
  Attr attr;
  bool greater;      // louder/longer/loudest/longest
  bool superlative;
};
std::optional<AttributeWord> attribute_word(std::string_view w);

}  // namespace daqa::questions

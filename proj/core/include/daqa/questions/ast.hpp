#pragma once

#include <memory>
#include <string>
#include <variant>

#include "daqa/common/io.hpp"

namespace daqa::questions {

enum class Attr { Duration, Loudness };
enum class Direction { Before, After };
enum class Extreme { Max, Min };
enum class Order { Greater, Less, Equal };      // attribute comparison
enum class CountRel { More, Fewer, Equal };     // cardinality comparison

struct Selector;
struct SetSelector;
using SelectorPtr = std::shared_ptr<const Selector>;
using SetPtr = std::shared_ptr<const SetSelector>;

// ---- singular references -------------------------------------------------

struct ByType { std::string type_id; };
/// 1-based ordinal; 0 means "last".
struct ByOrdinal { int n = 1; };
struct Relative { SelectorPtr base; Direction dir = Direction::After; bool immediate = true; };
struct Superlative { Attr attr = Attr::Loudness; Extreme extreme = Extreme::Max; };

struct Selector {
  std::variant<ByType, ByOrdinal, Relative, Superlative> node;
};

// ---- set references ------------------------------------------------------

struct AllOfType { std::string type_id; };
/// Every occurrence before/after the referent; with `immediate`, only its neighbour.
struct AllSide { SelectorPtr base; Direction dir = Direction::Before; bool immediate = false; };
/// Occurrences whose attribute is strictly greater (`greater`) or smaller than the referent's.
struct AttrFiltered { Attr attr = Attr::Loudness; bool greater = true; SelectorPtr base; };
struct AllEvents {};
/// Members of `set` that have the given type.
struct TypeFiltered { std::string type_id; SetPtr set; };
/// The referent as a set (empty when the referent is "nothing").
struct Single { SelectorPtr base; };

struct SetSelector {
  std::variant<AllOfType, AllSide, AttrFiltered, AllEvents, TypeFiltered, Single> node;
};

// ---- question roots ------------------------------------------------------

struct Exist { SetPtr set; };
struct QueryType { SelectorPtr sel; };
struct Count { SetPtr set; };
struct CompareAttr { SelectorPtr a, b; Attr attr = Attr::Loudness; Order order = Order::Greater; };
struct CompareSame { SelectorPtr a, b; };
struct CompareInt { SetPtr a, b; CountRel rel = CountRel::More; };

struct QuestionAst {
  std::variant<Exist, QueryType, Count, CompareAttr, CompareSame, CompareInt> root;
};

// Convenience constructors (mostly for tests and the catalog).
SelectorPtr by_type(std::string id);
SelectorPtr by_ordinal(int n);
SelectorPtr last();
SelectorPtr relative(SelectorPtr base, Direction dir, bool immediate = true);
SelectorPtr superlative(Attr attr, Extreme e);
SetPtr all_of_type(std::string id);
SetPtr all_side(SelectorPtr base, Direction dir, bool immediate = false);
SetPtr attr_filtered(Attr attr, bool greater, SelectorPtr base);
SetPtr all_events();
SetPtr type_filtered(std::string id, SetPtr set);
SetPtr single(SelectorPtr base);

/// Node depth; the root counts as 1.
int depth(const QuestionAst& ast);
inline constexpr int kMaxAstDepth = 4;

Json to_json(const QuestionAst& ast);
Json to_json(const Selector& sel);
Json to_json(const SetSelector& set);
/// Parses a concrete (placeholder-free) AST. Throws SchemaError, including
/// for an AttrFiltered node whose comparative word names the other attribute.
QuestionAst ast_from_json(const Json& j);

std::string_view to_string(Attr a);
std::string_view to_string(Direction d);
Attr attr_from_string(std::string_view s);
Direction direction_from_string(std::string_view s);
/// "longer" -> {Duration, true}; "quieter" -> {Loudness, false}; ...
std::pair<Attr, bool> comparative(std::string_view word);
std::string_view comparative_word(Attr a, bool greater);

}  // namespace daqa::questions

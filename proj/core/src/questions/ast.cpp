#include "daqa/questions/ast.hpp"

#include <algorithm>

#include "daqa/common/error.hpp"

namespace daqa::questions {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

SelectorPtr by_type(std::string id) { return std::make_shared<Selector>(Selector{ByType{std::move(id)}}); }
SelectorPtr by_ordinal(int n) { return std::make_shared<Selector>(Selector{ByOrdinal{n}}); }
SelectorPtr last() { return by_ordinal(0); }
SelectorPtr relative(SelectorPtr base, Direction dir, bool immediate) {
  return std::make_shared<Selector>(Selector{Relative{std::move(base), dir, immediate}});
}
SelectorPtr superlative(Attr attr, Extreme e) { return std::make_shared<Selector>(Selector{Superlative{attr, e}}); }
SetPtr all_of_type(std::string id) { return std::make_shared<SetSelector>(SetSelector{AllOfType{std::move(id)}}); }
SetPtr all_side(SelectorPtr base, Direction dir, bool immediate) {
  return std::make_shared<SetSelector>(SetSelector{AllSide{std::move(base), dir, immediate}});
}
SetPtr attr_filtered(Attr attr, bool greater, SelectorPtr base) {
  return std::make_shared<SetSelector>(SetSelector{AttrFiltered{attr, greater, std::move(base)}});
}
SetPtr all_events() { return std::make_shared<SetSelector>(SetSelector{AllEvents{}}); }
SetPtr type_filtered(std::string id, SetPtr set) {
  return std::make_shared<SetSelector>(SetSelector{TypeFiltered{std::move(id), std::move(set)}});
}
SetPtr single(SelectorPtr base) { return std::make_shared<SetSelector>(SetSelector{Single{std::move(base)}}); }

std::string_view to_string(Attr a) { return a == Attr::Duration ? "duration" : "loudness"; }
std::string_view to_string(Direction d) { return d == Direction::Before ? "before" : "after"; }

Attr attr_from_string(std::string_view s) {
  if (s == "duration") return Attr::Duration;
  if (s == "loudness") return Attr::Loudness;
  throw SchemaError("unknown attribute '" + std::string(s) + "'");
}

Direction direction_from_string(std::string_view s) {
  if (s == "before") return Direction::Before;
  if (s == "after") return Direction::After;
  throw SchemaError("unknown direction '" + std::string(s) + "'");
}

std::pair<Attr, bool> comparative(std::string_view w) {
  if (w == "longer") return {Attr::Duration, true};
  if (w == "shorter") return {Attr::Duration, false};
  if (w == "louder") return {Attr::Loudness, true};
  if (w == "quieter") return {Attr::Loudness, false};
  throw SchemaError("unknown comparative '" + std::string(w) + "'");
}

std::string_view comparative_word(Attr a, bool greater) {
  if (a == Attr::Duration) return greater ? "longer" : "shorter";
  return greater ? "louder" : "quieter";
}

namespace {

int depth_of(const Selector& s);
int depth_of(const SetSelector& s);

int depth_of(const Selector& s) {
  return std::visit(Overloaded{
                        [](const Relative& r) { return 1 + depth_of(*r.base); },
                        [](const auto&) { return 1; },
                    },
                    s.node);
}

int depth_of(const SetSelector& s) {
  return std::visit(Overloaded{
                        [](const AllSide& r) { return 1 + depth_of(*r.base); },
                        [](const AttrFiltered& r) { return 1 + depth_of(*r.base); },
                        [](const TypeFiltered& r) { return 1 + depth_of(*r.set); },
                        [](const Single& r) { return 1 + depth_of(*r.base); },
                        [](const auto&) { return 1; },
                    },
                    s.node);
}

}  // namespace

int depth(const QuestionAst& ast) {
  return 1 + std::visit(Overloaded{
                            [](const Exist& r) { return depth_of(*r.set); },
                            [](const QueryType& r) { return depth_of(*r.sel); },
                            [](const Count& r) { return depth_of(*r.set); },
                            [](const CompareAttr& r) { return std::max(depth_of(*r.a), depth_of(*r.b)); },
                            [](const CompareSame& r) { return std::max(depth_of(*r.a), depth_of(*r.b)); },
                            [](const CompareInt& r) { return std::max(depth_of(*r.a), depth_of(*r.b)); },
                        },
                        ast.root);
}

// ---- serialization -----------------------------------------------------------

Json to_json(const Selector& sel) {
  return std::visit(Overloaded{
                        [](const ByType& n) { return Json{{"op", "ByType"}, {"type", n.type_id}}; },
                        [](const ByOrdinal& n) {
                          return n.n == 0 ? Json{{"op", "ByOrdinal"}, {"n", "last"}}
                                          : Json{{"op", "ByOrdinal"}, {"n", n.n}};
                        },
                        [](const Relative& n) {
                          return Json{{"op", "Relative"},
                                      {"sel", to_json(*n.base)},
                                      {"dir", std::string(to_string(n.dir))},
                                      {"immediate", n.immediate}};
                        },
                        [](const Superlative& n) {
                          return Json{{"op", "Superlative"},
                                      {"attr", std::string(to_string(n.attr))},
                                      {"extreme", n.extreme == Extreme::Max ? "max" : "min"}};
                        },
                    },
                    sel.node);
}

Json to_json(const SetSelector& set) {
  return std::visit(Overloaded{
                        [](const AllOfType& n) { return Json{{"op", "AllOfType"}, {"type", n.type_id}}; },
                        [](const AllSide& n) {
                          return Json{{"op", "AllSide"},
                                      {"sel", to_json(*n.base)},
                                      {"dir", std::string(to_string(n.dir))},
                                      {"immediate", n.immediate}};
                        },
                        [](const AttrFiltered& n) {
                          return Json{{"op", "AttrFiltered"},
                                      {"attr", std::string(to_string(n.attr))},
                                      {"cmp", std::string(comparative_word(n.attr, n.greater))},
                                      {"sel", to_json(*n.base)}};
                        },
                        [](const AllEvents&) { return Json{{"op", "AllEvents"}}; },
                        [](const TypeFiltered& n) {
                          return Json{{"op", "TypeFiltered"}, {"type", n.type_id}, {"set", to_json(*n.set)}};
                        },
                        [](const Single& n) { return Json{{"op", "Single"}, {"sel", to_json(*n.base)}}; },
                    },
                    set.node);
}

namespace {

std::string_view order_name(Order o) {
  switch (o) {
    case Order::Greater: return "greater";
    case Order::Less: return "less";
    default: return "equal";
  }
}

std::string_view rel_name(CountRel r) {
  switch (r) {
    case CountRel::More: return "more";
    case CountRel::Fewer: return "fewer";
    default: return "equal";
  }
}

}  // namespace

Json to_json(const QuestionAst& ast) {
  return std::visit(Overloaded{
                        [](const Exist& r) { return Json{{"op", "Exist"}, {"set", to_json(*r.set)}}; },
                        [](const QueryType& r) { return Json{{"op", "QueryType"}, {"sel", to_json(*r.sel)}}; },
                        [](const Count& r) { return Json{{"op", "Count"}, {"set", to_json(*r.set)}}; },
                        [](const CompareAttr& r) {
                          return Json{{"op", "CompareAttr"},
                                      {"a", to_json(*r.a)},
                                      {"b", to_json(*r.b)},
                                      {"attr", std::string(to_string(r.attr))},
                                      {"rel", std::string(order_name(r.order))}};
                        },
                        [](const CompareSame& r) {
                          return Json{{"op", "CompareSame"}, {"a", to_json(*r.a)}, {"b", to_json(*r.b)}};
                        },
                        [](const CompareInt& r) {
                          return Json{{"op", "CompareInt"},
                                      {"a", to_json(*r.a)},
                                      {"b", to_json(*r.b)},
                                      {"rel", std::string(rel_name(r.rel))}};
                        },
                    },
                    ast.root);
}

namespace {

std::string str(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    throw SchemaError(std::string("AST node missing string field '") + key + "': " + j.dump());
  return j[key].get<std::string>();
}

SelectorPtr selector_from_json(const Json& j);
SetPtr set_from_json(const Json& j);

SelectorPtr selector_from_json(const Json& j) {
  const std::string op = str(j, "op");
  if (op == "ByType") return by_type(str(j, "type"));
  if (op == "ByOrdinal") {
    const Json& n = j.at("n");
    if (n.is_string()) {
      if (n.get<std::string>() != "last") throw SchemaError("ByOrdinal: bad ordinal " + n.dump());
      return last();
    }
    const int v = n.get<int>();
    if (v < 1) throw SchemaError("ByOrdinal: ordinal must be >= 1");
    return by_ordinal(v);
  }
  if (op == "Relative")
    return relative(selector_from_json(j.at("sel")), direction_from_string(str(j, "dir")),
                    j.value("immediate", true));
  if (op == "Superlative") {
    const std::string e = str(j, "extreme");
    if (e != "max" && e != "min") throw SchemaError("Superlative: bad extreme '" + e + "'");
    return superlative(attr_from_string(str(j, "attr")), e == "max" ? Extreme::Max : Extreme::Min);
  }
  throw SchemaError("unknown selector op '" + op + "'");
}

SetPtr set_from_json(const Json& j) {
  const std::string op = str(j, "op");
  if (op == "AllOfType") return all_of_type(str(j, "type"));
  if (op == "AllSide")
    return all_side(selector_from_json(j.at("sel")), direction_from_string(str(j, "dir")),
                    j.value("immediate", false));
  if (op == "AttrFiltered") {
    const Attr attr = attr_from_string(str(j, "attr"));
    const auto [cmp_attr, greater] = comparative(str(j, "cmp"));
    if (cmp_attr != attr) throw SchemaError("AttrFiltered mixes duration and loudness: " + j.dump());
    return attr_filtered(attr, greater, selector_from_json(j.at("sel")));
  }
  if (op == "AllEvents") return all_events();
  if (op == "TypeFiltered") return type_filtered(str(j, "type"), set_from_json(j.at("set")));
  if (op == "Single") return single(selector_from_json(j.at("sel")));
  throw SchemaError("unknown set op '" + op + "'");
}

}  // namespace

QuestionAst ast_from_json(const Json& j) {
  try {
    const std::string op = str(j, "op");
    QuestionAst ast;
    if (op == "Exist") {
      ast.root = Exist{set_from_json(j.at("set"))};
    } else if (op == "QueryType") {
      ast.root = QueryType{selector_from_json(j.at("sel"))};
    } else if (op == "Count") {
      ast.root = Count{set_from_json(j.at("set"))};
    } else if (op == "CompareAttr") {
      const std::string rel = str(j, "rel");
      Order o = rel == "greater" ? Order::Greater : rel == "less" ? Order::Less : Order::Equal;
      if (rel != "greater" && rel != "less" && rel != "equal")
        throw SchemaError("CompareAttr: bad rel '" + rel + "'");
      ast.root = CompareAttr{selector_from_json(j.at("a")), selector_from_json(j.at("b")),
                             attr_from_string(str(j, "attr")), o};
    } else if (op == "CompareSame") {
      ast.root = CompareSame{selector_from_json(j.at("a")), selector_from_json(j.at("b"))};
    } else if (op == "CompareInt") {
      const std::string rel = str(j, "rel");
      if (rel != "more" && rel != "fewer" && rel != "equal") throw SchemaError("CompareInt: bad rel '" + rel + "'");
      CountRel r = rel == "more" ? CountRel::More : rel == "fewer" ? CountRel::Fewer : CountRel::Equal;
      ast.root = CompareInt{set_from_json(j.at("a")), set_from_json(j.at("b")), r};
    } else {
      throw SchemaError("unknown root op '" + op + "'");
    }
    return ast;
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("AST: ") + e.what());
  }
}

}  // namespace daqa::questions

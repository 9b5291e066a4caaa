#include "daqa/questions/catalog.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <regex>
#include <set>

#include "daqa/common/error.hpp"
#include "daqa/questions/families.hpp"

namespace daqa::questions {

std::string_view to_string(Skill s) {
  switch (s) {
    case Skill::Exist: return "Exist";
    case Skill::Query: return "Query";
    case Skill::Count: return "Count";
    case Skill::Compare: return "Compare";
    case Skill::CompareInteger: return "CompareInteger";
  }
  return "?";
}

Skill skill_from_string(std::string_view s) {
  for (Skill k : kAllSkills)
    if (to_string(k) == s) return k;
  throw SchemaError("unknown skill '" + std::string(s) + "'");
}

namespace {

constexpr std::array<std::pair<PlaceholderKind, std::string_view>, 7> kKindNames{{
    {PlaceholderKind::Source, "Source"},
    {PlaceholderKind::Action, "Action"},
    {PlaceholderKind::RelOrder, "RelOrder"},
    {PlaceholderKind::Ordinal, "Ordinal"},
    {PlaceholderKind::Attribute, "Attribute"},
    {PlaceholderKind::Relation, "Relation"},
    {PlaceholderKind::Count, "Count"},
}};

constexpr std::array<std::string_view, 12> kOrdinalWords{"first",   "second", "third",  "fourth",
                                                         "fifth",   "sixth",  "seventh", "eighth",
                                                         "ninth",   "tenth",  "eleventh", "twelfth"};

}  // namespace

std::string_view to_string(PlaceholderKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "?";
}

PlaceholderKind placeholder_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  throw SchemaError("unknown placeholder kind '" + std::string(s) + "'");
}

std::string ordinal_word(std::string_view ordinal) {
  if (ordinal == "last") return "last";
  const int n = std::stoi(std::string(ordinal));
  if (n < 1 || n > static_cast<int>(kOrdinalWords.size()))
    throw SchemaError("ordinal out of range: " + std::string(ordinal));
  return std::string(kOrdinalWords[static_cast<std::size_t>(n - 1)]);
}

std::optional<AttributeWord> attribute_word(std::string_view w) {
  if (w == "louder") return AttributeWord{Attr::Loudness, true, false};
  if (w == "quieter") return AttributeWord{Attr::Loudness, false, false};
  if (w == "longer") return AttributeWord{Attr::Duration, true, false};
  if (w == "shorter") return AttributeWord{Attr::Duration, false, false};
  if (w == "loudest") return AttributeWord{Attr::Loudness, true, true};
  if (w == "quietest") return AttributeWord{Attr::Loudness, false, true};
  if (w == "longest") return AttributeWord{Attr::Duration, true, true};
  if (w == "shortest") return AttributeWord{Attr::Duration, false, true};
  return std::nullopt;
}

const Placeholder* QuestionTemplate::placeholder(std::string_view name) const {
  for (const auto& p : placeholders)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::string> QuestionTemplate::slots() const {
  std::vector<std::string> out;
  for (const auto& p : placeholders)
    if (p.kind != PlaceholderKind::Action) out.push_back(p.name);
  return out;
}

Catalog::Catalog(std::vector<QuestionTemplate> templates, const events::Taxonomy&)
    : templates_(std::move(templates)) {
  for (std::size_t i = 0; i < templates_.size(); ++i)
    if (!index_.emplace(templates_[i].id, i).second)
      throw SchemaError("duplicate template_id '" + templates_[i].id + "'");
}

std::optional<std::size_t> Catalog::index_of(std::string_view id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const QuestionTemplate& Catalog::by_id(std::string_view id) const {
  const auto i = index_of(id);
  if (!i) throw SchemaError("unknown template '" + std::string(id) + "'");
  return templates_[*i];
}

// ---- pattern binding --------------------------------------------------------

namespace {

struct Binder {
  const QuestionTemplate& t;
  const Bindings& b;

  [[noreturn]] void fail(const std::string& msg) const {
    throw SchemaError("template '" + t.id + "': " + msg);
  }

  const std::string& value(const std::string& name) const {
    const auto it = b.find(name);
    if (it == b.end()) fail("no binding for placeholder '" + name + "'");
    return it->second;
  }

  Json slot(const std::string& key, const std::string& name, std::optional<Attr>& node_attr) const {
    const Placeholder* p = t.placeholder(name);
    if (!p) fail("semantics references undeclared placeholder '" + name + "'");
    const std::string& v = value(name);
    auto note_attr = [&](Attr a) {
      if (node_attr && *node_attr != a) fail("node mixes duration and loudness");
      node_attr = a;
    };
    switch (p->kind) {
      case PlaceholderKind::Source:
        if (key != "type") break;
        return v;
      case PlaceholderKind::RelOrder:
        if (key != "dir") break;
        return v;
      case PlaceholderKind::Ordinal:
        if (key != "n") break;
        if (v == "last") return v;
        return std::stoi(v);
      case PlaceholderKind::Relation:
        if (key != "rel") break;
        return v;
      case PlaceholderKind::Attribute: {
        const auto w = attribute_word(v);
        if (!w) fail("'" + v + "' is not an attribute word");
        note_attr(w->attr);
        if (key == "attr") return std::string(to_string(w->attr));
        if (key == "extreme") {
          if (!w->superlative) fail("'" + v + "' used as a superlative");
          return w->greater ? "max" : "min";
        }
        if (key == "cmp") {
          if (w->superlative) fail("'" + v + "' used as a comparative");
          return v;
        }
        if (key == "rel") {
          if (w->superlative) fail("'" + v + "' used as a comparative");
          return w->greater ? "greater" : "less";
        }
        break;
      }
      default:
        break;
    }
    fail("placeholder '" + name + "' of kind " + std::string(to_string(p->kind)) + " cannot fill field '" + key + "'");
  }

  Json bind(const Json& node) const {
    if (node.is_array()) {
      Json out = Json::array();
      for (const auto& e : node) out.push_back(bind(e));
      return out;
    }
    if (!node.is_object()) return node;
    std::optional<Attr> node_attr;
    Json out = Json::object();
    for (const auto& [key, v] : node.items()) {
      if (v.is_string() && !v.get<std::string>().empty() && v.get<std::string>()[0] == '$') {
        out[key] = slot(key, v.get<std::string>().substr(1), node_attr);
      } else {
        out[key] = bind(v);
      }
    }
    if (node.contains("attr") && node["attr"].is_string() && node["attr"].get<std::string>()[0] != '$') {
      const Attr literal = attr_from_string(node["attr"].get<std::string>());
      if (node_attr && *node_attr != literal) fail("node mixes duration and loudness");
    }
    return out;
  }
};

void collect_refs(const Json& node, std::set<std::string>& out) {
  if (node.is_string()) {
    const auto& s = node.get_ref<const std::string&>();
    if (!s.empty() && s[0] == '$') out.insert(s.substr(1));
  } else if (node.is_structured()) {
    for (const auto& e : node) collect_refs(e, out);
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool temporal(const Selector& s);
bool temporal(const SetSelector& s);

bool temporal(const Selector& s) {
  return std::visit(Overloaded{
                        [](const ByOrdinal&) { return true; },
                        [](const Relative&) { return true; },
                        [](const auto&) { return false; },
                    },
                    s.node);
}

bool temporal(const SetSelector& s) {
  return std::visit(Overloaded{
                        [](const AllSide&) { return true; },
                        [](const AttrFiltered& n) { return temporal(*n.base); },
                        [](const TypeFiltered& n) { return temporal(*n.set); },
                        [](const Single& n) { return temporal(*n.base); },
                        [](const auto&) { return false; },
                    },
                    s.node);
}

Skill root_skill(const QuestionAst& ast) {
  return std::visit(Overloaded{
                        [](const Exist&) { return Skill::Exist; },
                        [](const QueryType&) { return Skill::Query; },
                        [](const Count&) { return Skill::Count; },
                        [](const CompareAttr&) { return Skill::Compare; },
                        [](const CompareSame&) { return Skill::Compare; },
                        [](const CompareInt&) { return Skill::CompareInteger; },
                    },
                    ast.root);
}

}  // namespace

QuestionAst bind_semantics(const QuestionTemplate& t, const Bindings& b) {
  return ast_from_json(Binder{t, b}.bind(t.semantics));
}

bool uses_temporal(const QuestionAst& ast) {
  return std::visit(Overloaded{
                        [](const Exist& r) { return temporal(*r.set); },
                        [](const QueryType& r) { return temporal(*r.sel); },
                        [](const Count& r) { return temporal(*r.set); },
                        [](const CompareAttr& r) { return temporal(*r.a) || temporal(*r.b); },
                        [](const CompareSame& r) { return temporal(*r.a) || temporal(*r.b); },
                        [](const CompareInt& r) { return temporal(*r.a) || temporal(*r.b); },
                    },
                    ast.root);
}

// ---- parsing and validation ---------------------------------------------------

namespace {

QuestionTemplate parse_template(const Json& j, const events::Taxonomy& taxonomy, const AnswerVocab& vocab) {
  QuestionTemplate t;
  t.id = j.at("template_id").get<std::string>();
  if (t.id.empty()) throw SchemaError("template with empty template_id");
  auto fail = [&](const std::string& msg) { throw SchemaError("template '" + t.id + "': " + msg); };

  t.skill = skill_from_string(j.at("skill").get<std::string>());
  t.family = j.at("family").get<std::string>();
  if (!find_family(t.family)) fail("unknown answer family '" + t.family + "'");

  std::set<std::string> names;
  for (const auto& pj : j.at("placeholders")) {
    Placeholder p;
    p.name = pj.at("name").get<std::string>();
    p.kind = placeholder_kind_from_string(pj.at("kind").get<std::string>());
    if (pj.contains("values")) p.values = pj["values"].get<std::vector<std::string>>();
    if (!names.insert(p.name).second) fail("duplicate placeholder '" + p.name + "'");
    switch (p.kind) {
      case PlaceholderKind::Attribute:
        if (p.values.empty()) fail("attribute placeholder '" + p.name + "' needs values");
        for (const auto& v : p.values)
          if (!attribute_word(v)) fail("'" + v + "' is not an attribute word");
        break;
      case PlaceholderKind::Relation:
        if (p.values.empty()) p.values = {"more", "fewer"};
        for (const auto& v : p.values)
          if (v != "more" && v != "fewer") fail("relation value '" + v + "' must be more or fewer");
        break;
      case PlaceholderKind::Count:
        fail("Count placeholders have no semantic slot");
      default:
        if (!p.values.empty()) fail("placeholder '" + p.name + "' does not take explicit values");
    }
    t.placeholders.push_back(std::move(p));
  }
  // Source S<suffix> pairs with Action A<suffix>.
  for (const auto& p : t.placeholders) {
    if (p.kind != PlaceholderKind::Source && p.kind != PlaceholderKind::Action) continue;
    const char want = p.kind == PlaceholderKind::Source ? 'S' : 'A';
    if (p.name.empty() || p.name[0] != want) fail("placeholder '" + p.name + "' must start with " + want);
    const std::string partner = std::string(1, want == 'S' ? 'A' : 'S') + p.name.substr(1);
    const Placeholder* q = t.placeholder(partner);
    const PlaceholderKind other = want == 'S' ? PlaceholderKind::Action : PlaceholderKind::Source;
    if (!q || q->kind != other) fail("placeholder '" + p.name + "' has no partner '" + partner + "'");
  }

  t.phrasings = j.at("phrasings").get<std::vector<std::string>>();
  if (t.phrasings.size() < 2) fail("needs at least two phrasings");
  static const std::regex slot_re("<([A-Za-z0-9_]+)>");
  for (const auto& ph : t.phrasings) {
    std::set<std::string> used;
    for (auto it = std::sregex_iterator(ph.begin(), ph.end(), slot_re); it != std::sregex_iterator(); ++it) {
      const std::string name = (*it)[1].str();
      if (!names.count(name)) fail("phrasing references undeclared placeholder '" + name + "'");
      used.insert(name);
    }
    for (const auto& n : names)
      if (!used.count(n)) fail("phrasing \"" + ph + "\" does not use placeholder '" + n + "'");
  }

  t.semantics = j.at("semantics");
  std::set<std::string> refs;
  collect_refs(t.semantics, refs);
  for (const auto& r : refs)
    if (!names.count(r)) fail("semantics references undeclared placeholder '" + r + "'");
  for (const auto& s : t.slots())
    if (!refs.count(s)) fail("placeholder '" + s + "' is not used by the semantics");

  for (const auto& pair : j.value("distinct", Json::array())) {
    auto a = pair.at(0).get<std::string>(), b = pair.at(1).get<std::string>();
    for (const auto& n : {a, b})
      if (!refs.count(n)) fail("distinct constraint names unknown slot '" + n + "'");
    t.distinct.emplace_back(std::move(a), std::move(b));
  }

  for (const auto& label : j.at("support").get<std::vector<std::string>>()) {
    if (label == "@types") {
      for (const auto& ty : taxonomy.types()) t.support.push_back(ty.id);
    } else {
      if (!vocab.index_of(label)) fail("support label '" + label + "' is not an answer");
      t.support.push_back(label);
    }
  }
  if (t.support.empty()) fail("empty answer support");

  // Trial-bind every attribute/relation value to validate the pattern.
  Bindings trial;
  std::vector<const Placeholder*> multi;
  for (const auto& p : t.placeholders) {
    switch (p.kind) {
      case PlaceholderKind::Source: trial[p.name] = taxonomy.at(0).id; break;
      case PlaceholderKind::RelOrder: trial[p.name] = "before"; break;
      case PlaceholderKind::Ordinal: trial[p.name] = "1"; break;
      case PlaceholderKind::Attribute:
      case PlaceholderKind::Relation: trial[p.name] = p.values.front(); multi.push_back(&p); break;
      default: break;
    }
  }
  std::optional<bool> temporal_flag;
  auto check = [&](const Bindings& b) {
    const QuestionAst ast = bind_semantics(t, b);
    if (depth(ast) > kMaxAstDepth) fail("semantics deeper than " + std::to_string(kMaxAstDepth));
    if (root_skill(ast) != t.skill) fail("semantics root does not match skill " + std::string(to_string(t.skill)));
    temporal_flag = uses_temporal(ast);
  };
  std::function<void(std::size_t)> sweep = [&](std::size_t k) {
    if (k == multi.size()) return check(trial);
    for (const auto& v : multi[k]->values) {
      trial[multi[k]->name] = v;
      sweep(k + 1);
    }
  };
  sweep(0);
  t.requires_temporal = *temporal_flag;
  if (j.contains("requires_temporal") && j["requires_temporal"].get<bool>() != t.requires_temporal)
    fail("requires_temporal disagrees with the semantics");
  return t;
}

}  // namespace

Catalog catalog_from_json(const Json& j, const events::Taxonomy& taxonomy) {
  const AnswerVocab vocab(taxonomy);
  std::vector<QuestionTemplate> templates;
  std::set<std::string> seen;
  try {
    for (const auto& tj : j.at("templates")) {
      templates.push_back(parse_template(tj, taxonomy, vocab));
      if (!seen.insert(templates.back().id).second)
        throw SchemaError("duplicate template_id '" + templates.back().id + "'");
    }
  } catch (const Json::exception& e) {
    throw SchemaError(std::string("catalog: ") + e.what());
  }
  if (templates.empty()) throw SchemaError("catalog has no templates");
  return Catalog(std::move(templates), taxonomy);
}

Catalog load_catalog(const std::filesystem::path& path, const events::Taxonomy& taxonomy) {
  return catalog_from_json(read_json(path), taxonomy);
}

Catalog default_catalog(const events::Taxonomy& taxonomy) {
  return load_catalog(events::default_data_dir() / "catalog.json", taxonomy);
}

}  // namespace daqa::questions

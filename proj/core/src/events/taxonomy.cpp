#include "daqa/events/taxonomy.hpp"

#include <cmath>
#include <set>

#include "daqa/common/error.hpp"

#ifndef DAQA_DATA_DIR
#define DAQA_DATA_DIR "data"
#endif

namespace daqa::events {

std::string_view to_string(Continuity c) {
  return c == Continuity::Discrete ? "discrete" : "continuous";
}

Continuity continuity_from_string(std::string_view s) {
  if (s == "discrete") return Continuity::Discrete;
  if (s == "continuous") return Continuity::Continuous;
  throw SchemaError("unknown continuity '" + std::string(s) + "'");
}

Taxonomy::Taxonomy(std::vector<EventType> types) : types_(std::move(types)) {
  if (types_.empty()) throw SchemaError("no event types");
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::string>> names;
  for (const auto& t : types_) {
    if (t.id.empty()) throw SchemaError("event type with empty id");
    if (!ids.insert(t.id).second) throw SchemaError("duplicate event type id '" + t.id + "'");
    if (!names.insert({t.source, t.action}).second)
      throw SchemaError("duplicate event type name '" + t.name() + "'");
    if (!(t.min_duration_s > 0.0) || !(t.max_duration_s >= t.min_duration_s) ||
        !std::isfinite(t.max_duration_s))
      throw SchemaError("bad duration range for event type '" + t.id + "'");
  }
}

std::optional<std::size_t> Taxonomy::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < types_.size(); ++i)
    if (types_[i].id == id) return i;
  return std::nullopt;
}

const EventType& Taxonomy::by_id(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw SchemaError("unknown event type id '" + std::string(id) + "'");
  return types_[*i];
}

Json Taxonomy::to_json() const {
  Json arr = Json::array();
  for (const auto& t : types_) {
    arr.push_back({{"id", t.id},
                   {"source", t.source},
                   {"action", t.action},
                   {"continuity", std::string(to_string(t.continuity))},
                   {"duration_range_s", {t.min_duration_s, t.max_duration_s}}});
  }
  return Json{{"types", arr}};
}

Taxonomy Taxonomy::from_json(const Json& j) {
  if (!j.contains("types") || !j["types"].is_array())
    throw SchemaError("taxonomy: missing 'types' array");
  std::vector<EventType> types;
  for (const auto& e : j["types"]) {
    EventType t;
    try {
      t.id = e.at("id").get<std::string>();
      t.source = e.at("source").get<std::string>();
      t.action = e.at("action").get<std::string>();
      t.continuity = continuity_from_string(e.at("continuity").get<std::string>());
      const auto& r = e.at("duration_range_s");
      t.min_duration_s = r.at(0).get<double>();
      t.max_duration_s = r.at(1).get<double>();
    } catch (const Json::exception& ex) {
      throw SchemaError(std::string("taxonomy entry: ") + ex.what());
    }
    types.push_back(std::move(t));
  }
  return Taxonomy(std::move(types));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  return Taxonomy::from_json(read_json(path));
}

std::filesystem::path default_data_dir() { return DAQA_DATA_DIR; }

Taxonomy default_taxonomy() { return load_taxonomy(default_data_dir() / "taxonomy.json"); }

}  // namespace daqa::events

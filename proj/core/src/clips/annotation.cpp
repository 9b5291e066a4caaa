#include "daqa/clips/annotation.hpp"

#include <algorithm>
#include <cmath>

#include "daqa/common/error.hpp"

namespace daqa::clips {

std::string ClipAnnotation::sequence_key() const {
  std::string key;
  for (const auto& e : events) {
    if (!key.empty()) key += ',';
    key += e.type_id;
    key += '#';
    key += std::to_string(e.instance_index);
  }
  return key;
}

Json to_json(const ClipAnnotation& a) {
  Json events = Json::array();
  for (const auto& e : a.events) {
    events.push_back({{"type_id", e.type_id},
                      {"instance_index", e.instance_index},
                      {"start_s", e.start_s},
                      {"end_s", e.end_s},
                      {"loudness", e.loudness},
                      {"ordinal", e.ordinal}});
  }
  return Json{{"clip_id", a.clip_id},
              {"has_noise", a.has_noise},
              {"total_duration_s", a.total_duration_s},
              {"events", events}};
}

ClipAnnotation annotation_from_json(const Json& j) {
  try {
    ClipAnnotation a;
    a.clip_id = j.at("clip_id").get<std::string>();
    a.has_noise = j.at("has_noise").get<bool>();
    a.total_duration_s = j.at("total_duration_s").get<double>();
    for (const auto& e : j.at("events")) {
      EventOccurrence o;
      o.type_id = e.at("type_id").get<std::string>();
      o.instance_index = e.at("instance_index").get<int>();
      o.start_s = e.at("start_s").get<double>();
      o.end_s = e.at("end_s").get<double>();
      o.loudness = e.at("loudness").get<double>();
      o.ordinal = e.at("ordinal").get<int>();
      a.events.push_back(std::move(o));
    }
    return a;
  } catch (const Json::exception& ex) {
    throw SchemaError(std::string("annotation: ") + ex.what());
  }
}

std::vector<ClipAnnotation> read_annotations(const std::filesystem::path& path) {
  std::vector<ClipAnnotation> out;
  for (const auto& row : read_jsonl(path)) out.push_back(annotation_from_json(row));
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<ClipAnnotation>& clips) {
  std::vector<Json> rows;
  rows.reserve(clips.size());
  for (const auto& c : clips) rows.push_back(to_json(c));
  write_jsonl(path, rows);
}

std::vector<std::string> check_annotation(const ClipAnnotation& clip, const events::Taxonomy& taxonomy) {
  std::vector<std::string> out;
  const auto& ev = clip.events;
  const std::string who = clip.clip_id + ": ";
  if (ev.size() < static_cast<std::size_t>(kMinEvents) || ev.size() > static_cast<std::size_t>(kMaxEvents))
    out.push_back(who + "has " + std::to_string(ev.size()) + " events");
  double max_end = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (e.ordinal != static_cast<int>(i) + 1) out.push_back(who + "ordinal mismatch at " + std::to_string(i));
    if (!(e.end_s > e.start_s) || e.start_s < 0.0) out.push_back(who + "bad interval at " + std::to_string(i));
    if (!(e.loudness > 0.0) || !std::isfinite(e.loudness)) out.push_back(who + "bad loudness at " + std::to_string(i));
    if (!taxonomy.index_of(e.type_id)) out.push_back(who + "unknown type " + e.type_id);
    max_end = std::max(max_end, e.end_s);
    if (i == 0) continue;
    const auto& p = ev[i - 1];
    if (!(e.start_s > p.start_s)) out.push_back(who + "events out of order at " + std::to_string(i));
    if (e.start_s < p.end_s - kMaxOverlapS - 1e-9) out.push_back(who + "overlap above limit at " + std::to_string(i));
    if (e.type_id == p.type_id && taxonomy.index_of(e.type_id) && !taxonomy.by_id(e.type_id).discrete())
      out.push_back(who + "adjacent continuous " + e.type_id + " at " + std::to_string(i));
  }
  if (std::abs(clip.total_duration_s - max_end) > 1e-9) out.push_back(who + "total_duration_s != max end");
  return out;
}

}  // namespace daqa::clips

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "daqa/common/io.hpp"

namespace daqa::events {

enum class Continuity { Discrete, Continuous };

std::string_view to_string(Continuity c);
Continuity continuity_from_string(std::string_view s);

struct EventType {
  std::string id;      // short code, e.g. "d000"
  std::string source;  // e.g. "door"
  std::string action;  // e.g. "slamming"
  Continuity continuity = Continuity::Continuous;
  double min_duration_s = 1.0;
  double max_duration_s = 1.0;

  std::string name() const { return source + " " + action; }
  bool discrete() const { return continuity == Continuity::Discrete; }
};

/// Ordered list of event types with id lookup.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Validates: non-empty, unique ids, unique (source, action), sane durations.
  explicit Taxonomy(std::vector<EventType> types);

  const std::vector<EventType>& types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  const EventType& at(std::size_t i) const { return types_.at(i); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  const EventType& by_id(std::string_view id) const;

  Json to_json() const;
  static Taxonomy from_json(const Json& j);

 private:
  std::vector<EventType> types_;
};

Taxonomy load_taxonomy(const std::filesystem::path& path);

/// Directory holding the shipped taxonomy/catalog/synonym files.
std::filesystem::path default_data_dir();
Taxonomy default_taxonomy();

}  // namespace daqa::events

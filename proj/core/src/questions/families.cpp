#include "daqa/questions/families.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace daqa::questions {

namespace {

using clips::ClipAnnotation;
using Answer = std::optional<std::string>;

constexpr double kRelTie = 1e-9;

// Positions are 0-based indices into clip.events; -1 means "no such event".
constexpr int kNone = -1;

struct View {
  const ClipAnnotation& clip;
  const Bindings& b;

  int size() const { return static_cast<int>(clip.events.size()); }
  const std::string& type_at(int i) const { return clip.events[static_cast<std::size_t>(i)].type_id; }

  double value_at(int i, bool loudness) const {
    const auto& e = clip.events[static_cast<std::size_t>(i)];
    return loudness ? e.loudness : e.end_s - e.start_s;
  }

  const std::string& get(const char* name) const { return b.at(name); }

  int occurrences(const std::string& type) const {
    int c = 0;
    for (const auto& e : clip.events) c += e.type_id == type;
    return c;
  }

  // Position of the only event of the bound type, if exactly one.
  std::optional<int> unique(const char* slot) const {
    const std::string& type = get(slot);
    if (occurrences(type) != 1) return std::nullopt;
    for (int i = 0; i < size(); ++i)
      if (type_at(i) == type) return i;
    return std::nullopt;
  }

  std::optional<int> ordinal(const char* slot) const {
    const std::string& o = get(slot);
    if (o == "last") return size() > 0 ? std::optional<int>(size() - 1) : std::nullopt;
    const int n = std::stoi(o);
    if (n < 1 || n > size()) return std::nullopt;
    return n - 1;
  }

  bool after(const char* slot) const { return get(slot) == "after"; }

  bool loudness_word(const char* slot) const {
    const auto w = attribute_word(get(slot));
    return w->attr == Attr::Loudness;
  }
  bool greater_word(const char* slot) const { return attribute_word(get(slot))->greater; }

  // Unique extreme event; ill-posed when the top two values tie.
  std::optional<int> extreme(const char* slot) const {
    if (size() == 0) return std::nullopt;
    const bool loud = loudness_word(slot);
    const bool hi = greater_word(slot);
    std::vector<int> order(static_cast<std::size_t>(size()));
    for (int i = 0; i < size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
      return hi ? value_at(x, loud) > value_at(y, loud) : value_at(x, loud) < value_at(y, loud);
    });
    if (size() > 1 && same_value(value_at(order[0], loud), value_at(order[1], loud))) return std::nullopt;
    return order[0];
  }

  static bool same_value(double x, double y) {
    const double scale = std::max(std::fabs(x), std::fabs(y));
    return std::fabs(x - y) <= kRelTie * scale;
  }

  // The neighbour of `pos` on the bound side, or kNone at the clip edge.
  int neighbour(int pos, bool to_after) const {
    const int n = to_after ? pos + 1 : pos - 1;
    return n >= 0 && n < size() ? n : kNone;
  }

  // Events strictly on one side of `pos`, as a [lo, hi) range.
  std::pair<int, int> side(int pos, bool to_after) const {
    return to_after ? std::make_pair(pos + 1, size()) : std::make_pair(0, pos);
  }

  int count_type_in(const std::string& type, std::pair<int, int> r) const {
    int c = 0;
    for (int i = r.first; i < r.second; ++i) c += type_at(i) == type;
    return c;
  }

  // Number of events strictly above/below the reference value; nullopt if any
  // other event ties the reference.
  std::optional<int> count_beyond(int ref, const char* attr_slot, const std::string* only_type = nullptr) const {
    const bool loud = loudness_word(attr_slot);
    const bool hi = greater_word(attr_slot);
    const double v = value_at(ref, loud);
    int c = 0;
    for (int i = 0; i < size(); ++i) {
      if (i == ref) continue;
      const double w = value_at(i, loud);
      if (same_value(w, v)) return std::nullopt;
      if ((hi ? w > v : w < v) && (!only_type || type_at(i) == *only_type)) ++c;
    }
    return c;
  }

  // "yes"/"no" for a strict attribute comparison of two distinct events.
  Answer compare(int x, int y, const char* attr_slot) const {
    if (x == y) return std::nullopt;
    const bool loud = loudness_word(attr_slot);
    const double vx = value_at(x, loud), vy = value_at(y, loud);
    if (same_value(vx, vy)) return std::nullopt;
    return yn(greater_word(attr_slot) ? vx > vy : vx < vy);
  }

  Answer relation(int a, int c) const {
    return yn(get("R") == "more" ? a > c : a < c);
  }

  static Answer yn(bool v) { return std::string(v ? "yes" : "no"); }
  static Answer num(int n) { return std::to_string(n); }
};

using Proc = Answer (*)(const View&);

// ---- exist -------------------------------------------------------------------

Answer exist_type(const View& v) { return View::yn(v.occurrences(v.get("S")) > 0); }

Answer exist_type_side(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  return View::yn(v.count_type_in(v.get("S"), v.side(*ref, v.after("RO"))) > 0);
}

Answer exist_type_immediate(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  const int n = v.neighbour(*ref, v.after("RO"));
  return View::yn(n != kNone && v.type_at(n) == v.get("S"));
}

Answer exist_type_ordinal_side(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  return View::yn(v.count_type_in(v.get("S"), v.side(*ref, v.after("RO"))) > 0);
}

Answer exist_any_side(const View& v) {
  const auto ref = v.unique("S");
  if (!ref) return std::nullopt;
  const auto [lo, hi] = v.side(*ref, v.after("RO"));
  return View::yn(hi > lo);
}

Answer exist_type_superlative_side(const View& v) {
  const auto ref = v.extreme("AT");
  if (!ref) return std::nullopt;
  return View::yn(v.count_type_in(v.get("S"), v.side(*ref, v.after("RO"))) > 0);
}

Answer exist_attr_than(const View& v) {
  const auto ref = v.unique("S");
  if (!ref) return std::nullopt;
  const auto c = v.count_beyond(*ref, "AT");
  if (!c) return std::nullopt;
  return View::yn(*c > 0);
}

Answer exist_type_attr_than(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  const auto c = v.count_beyond(*ref, "AT", &v.get("S"));
  if (!c) return std::nullopt;
  return View::yn(*c > 0);
}

// ---- query -------------------------------------------------------------------

Answer neighbour_type(const View& v, std::optional<int> ref) {
  if (!ref) return std::nullopt;
  const int n = v.neighbour(*ref, v.after("RO"));
  return n == kNone ? std::string("nothing") : v.type_at(n);
}

Answer query_ordinal(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  return v.type_at(*ref);
}

Answer query_immediate_type(const View& v) { return neighbour_type(v, v.unique("S")); }

Answer query_superlative(const View& v) {
  const auto ref = v.extreme("AT");
  if (!ref) return std::nullopt;
  return v.type_at(*ref);
}

Answer query_immediate_ordinal(const View& v) { return neighbour_type(v, v.ordinal("O")); }

Answer query_immediate_superlative(const View& v) { return neighbour_type(v, v.extreme("AT")); }

// ---- count -------------------------------------------------------------------

Answer count_type(const View& v) { return View::num(v.occurrences(v.get("S"))); }

Answer count_range(const View& v, std::optional<int> ref) {
  if (!ref) return std::nullopt;
  const auto [lo, hi] = v.side(*ref, v.after("RO"));
  return View::num(std::max(0, hi - lo));
}

Answer count_side(const View& v) { return count_range(v, v.unique("S")); }

Answer count_ordinal_side(const View& v) { return count_range(v, v.ordinal("O")); }

Answer count_type_side(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  return View::num(v.count_type_in(v.get("S"), v.side(*ref, v.after("RO"))));
}

Answer count_attr_than(const View& v) {
  const auto ref = v.unique("S");
  if (!ref) return std::nullopt;
  const auto c = v.count_beyond(*ref, "AT");
  if (!c) return std::nullopt;
  return View::num(*c);
}

Answer count_type_ordinal_side(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  return View::num(v.count_type_in(v.get("S"), v.side(*ref, v.after("RO"))));
}

Answer count_all(const View& v) { return View::num(v.size()); }

Answer count_superlative_side(const View& v) { return count_range(v, v.extreme("AT")); }

Answer count_attr_than_ordinal(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  const auto c = v.count_beyond(*ref, "AT");
  if (!c) return std::nullopt;
  return View::num(*c);
}

// ---- compare -----------------------------------------------------------------

// Type equality of two resolved references; "no" when either is past the edge.
Answer same_pair(const View& v, int x, int y) {
  if (x != kNone && x == y) return std::nullopt;
  if (x == kNone || y == kNone) return View::yn(false);
  return View::yn(v.type_at(x) == v.type_at(y));
}

Answer same_ordinals(const View& v) {
  const auto x = v.ordinal("O"), y = v.ordinal("O2");
  if (!x || !y) return std::nullopt;
  return same_pair(v, *x, *y);
}

Answer same_immediates(const View& v) {
  const auto x = v.unique("S"), y = v.unique("S2");
  if (!x || !y) return std::nullopt;
  return same_pair(v, v.neighbour(*x, v.after("RO")), v.neighbour(*y, v.after("RO2")));
}

Answer compare_ordinal_type(const View& v) {
  const auto x = v.ordinal("O"), y = v.unique("S");
  if (!x || !y) return std::nullopt;
  return v.compare(*x, *y, "AT");
}

Answer compare_types(const View& v) {
  const auto x = v.unique("S"), y = v.unique("S2");
  if (!x || !y) return std::nullopt;
  return v.compare(*x, *y, "AT");
}

Answer compare_ordinals(const View& v) {
  const auto x = v.ordinal("O"), y = v.ordinal("O2");
  if (!x || !y) return std::nullopt;
  return v.compare(*x, *y, "AT");
}

Answer same_immediate_ordinal(const View& v) {
  const auto x = v.unique("S"), y = v.ordinal("O");
  if (!x || !y) return std::nullopt;
  return same_pair(v, v.neighbour(*x, v.after("RO")), *y);
}

Answer compare_immediate_type(const View& v) {
  const auto x = v.unique("S"), y = v.unique("S2");
  if (!x || !y) return std::nullopt;
  const int n = v.neighbour(*x, v.after("RO"));
  if (n == kNone) return std::nullopt;
  return v.compare(n, *y, "AT");
}

Answer same_neighbours(const View& v) {
  const auto x = v.unique("S");
  if (!x) return std::nullopt;
  return same_pair(v, v.neighbour(*x, false), v.neighbour(*x, true));
}

Answer compare_ordinal_immediate(const View& v) {
  const auto x = v.ordinal("O");
  if (!x) return std::nullopt;
  const int n = v.neighbour(*x, v.after("RO"));
  if (n == kNone) return std::nullopt;
  return v.compare(*x, n, "AT");
}

// ---- compare integer -------------------------------------------------------------

Answer more_types(const View& v) { return v.relation(v.occurrences(v.get("S")), v.occurrences(v.get("S2"))); }

Answer more_type_side(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  const auto [lo, hi] = v.side(*ref, v.after("RO"));
  return v.relation(v.occurrences(v.get("S")), hi - lo);
}

Answer more_ordinal_side_type(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  const auto [lo, hi] = v.side(*ref, v.after("RO"));
  return v.relation(hi - lo, v.occurrences(v.get("S")));
}

Answer more_before_after_type(const View& v) {
  const auto ref = v.unique("S");
  if (!ref) return std::nullopt;
  return v.relation(*ref, v.size() - *ref - 1);
}

Answer more_attr_type(const View& v) {
  const auto ref = v.unique("S");
  if (!ref) return std::nullopt;
  const auto c = v.count_beyond(*ref, "AT");
  if (!c) return std::nullopt;
  return v.relation(*c, v.occurrences(v.get("S2")));
}

Answer more_type_before_after(const View& v) {
  const auto ref = v.unique("S2");
  if (!ref) return std::nullopt;
  const std::string& t = v.get("S");
  return v.relation(v.count_type_in(t, v.side(*ref, false)), v.count_type_in(t, v.side(*ref, true)));
}

Answer more_superlative_side_type(const View& v) {
  const auto ref = v.extreme("AT");
  if (!ref) return std::nullopt;
  const auto [lo, hi] = v.side(*ref, v.after("RO"));
  return v.relation(hi - lo, v.occurrences(v.get("S")));
}

Answer more_before_after_ordinal(const View& v) {
  const auto ref = v.ordinal("O");
  if (!ref) return std::nullopt;
  return v.relation(*ref, v.size() - *ref - 1);
}

const std::map<std::string, Family, std::less<>>& registry() {
  static const auto table = [] {
    const std::pair<const char*, Proc> procs[] = {
        {"exist_type", exist_type},
        {"exist_type_side", exist_type_side},
        {"exist_type_immediate", exist_type_immediate},
        {"exist_type_ordinal_side", exist_type_ordinal_side},
        {"exist_any_side", exist_any_side},
        {"exist_type_superlative_side", exist_type_superlative_side},
        {"exist_attr_than", exist_attr_than},
        {"exist_type_attr_than", exist_type_attr_than},
        {"query_ordinal", query_ordinal},
        {"query_immediate_type", query_immediate_type},
        {"query_superlative", query_superlative},
        {"query_immediate_ordinal", query_immediate_ordinal},
        {"query_immediate_superlative", query_immediate_superlative},
        {"count_type", count_type},
        {"count_side", count_side},
        {"count_ordinal_side", count_ordinal_side},
        {"count_type_side", count_type_side},
        {"count_attr_than", count_attr_than},
        {"count_type_ordinal_side", count_type_ordinal_side},
        {"count_all", count_all},
        {"count_superlative_side", count_superlative_side},
        {"count_attr_than_ordinal", count_attr_than_ordinal},
        {"same_ordinals", same_ordinals},
        {"same_immediates", same_immediates},
        {"compare_ordinal_type", compare_ordinal_type},
        {"compare_types", compare_types},
        {"compare_ordinals", compare_ordinals},
        {"same_immediate_ordinal", same_immediate_ordinal},
        {"compare_immediate_type", compare_immediate_type},
        {"same_neighbours", same_neighbours},
        {"compare_ordinal_immediate", compare_ordinal_immediate},
        {"more_types", more_types},
        {"more_type_side", more_type_side},
        {"more_ordinal_side_type", more_ordinal_side_type},
        {"more_before_after_type", more_before_after_type},
        {"more_attr_type", more_attr_type},
        {"more_type_before_after", more_type_before_after},
        {"more_superlative_side_type", more_superlative_side_type},
        {"more_before_after_ordinal", more_before_after_ordinal},
    };
    std::map<std::string, Family, std::less<>> m;
    for (const auto& [name, proc] : procs)
      m.emplace(name, [proc](const Bindings& b, const ClipAnnotation& clip) { return proc(View{clip, b}); });
    return m;
  }();
  return table;
}

}  // namespace

const Family* find_family(std::string_view name) {
  const auto& r = registry();
  const auto it = r.find(name);
  return it == r.end() ? nullptr : &it->second;
}

std::vector<std::string> family_names() {
  std::vector<std::string> out;
  for (const auto& [name, f] : registry()) out.push_back(name);
  return out;
}

}  // namespace daqa::questions

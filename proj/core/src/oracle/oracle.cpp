#include "daqa/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "daqa/common/error.hpp"

namespace daqa::oracle {

using namespace questions;
using clips::ClipAnnotation;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using Set = std::optional<std::vector<std::size_t>>;

std::size_t index_of_type(const ClipAnnotation& clip, const std::string& type, std::size_t* count) {
  std::size_t found = 0;
  *count = 0;
  for (std::size_t i = 0; i < clip.events.size(); ++i) {
    if (clip.events[i].type_id == type) {
      found = i;
      ++*count;
    }
  }
  return found;
}

}  // namespace

bool ties(double a, double b) {
  return std::abs(a - b) <= kTieTolerance * std::max(std::abs(a), std::abs(b));
}

double attribute(const clips::EventOccurrence& e, Attr attr) {
  return attr == Attr::Duration ? e.duration() : e.loudness;
}

Ref resolve_selector(const Selector& sel, const ClipAnnotation& clip) {
  const std::size_t n = clip.events.size();
  return std::visit(
      Overloaded{
          [&](const ByType& s) {
            std::size_t count = 0;
            const std::size_t i = index_of_type(clip, s.type_id, &count);
            return count == 1 ? Ref::occurrence(i) : Ref::invalid();
          },
          [&](const ByOrdinal& s) {
            if (n == 0) return Ref::invalid();
            if (s.n == 0) return Ref::occurrence(n - 1);
            if (s.n < 0 || static_cast<std::size_t>(s.n) > n) return Ref::invalid();
            return Ref::occurrence(static_cast<std::size_t>(s.n) - 1);
          },
          [&](const Relative& s) {
            if (!s.immediate) return Ref::invalid();
            const Ref base = resolve_selector(*s.base, clip);
            if (!base.ok()) return Ref::invalid();
            if (s.dir == Direction::Before) return base.index == 0 ? Ref::nothing() : Ref::occurrence(base.index - 1);
            return base.index + 1 >= n ? Ref::nothing() : Ref::occurrence(base.index + 1);
          },
          [&](const Superlative& s) {
            if (n == 0) return Ref::invalid();
            std::size_t best = 0;
            for (std::size_t i = 1; i < n; ++i) {
              const double v = attribute(clip.events[i], s.attr);
              const double b = attribute(clip.events[best], s.attr);
              if (s.extreme == Extreme::Max ? v > b : v < b) best = i;
            }
            const double b = attribute(clip.events[best], s.attr);
            for (std::size_t i = 0; i < n; ++i)
              if (i != best && ties(attribute(clip.events[i], s.attr), b)) return Ref::invalid();
            return Ref::occurrence(best);
          },
      },
      sel.node);
}

Set resolve_set(const SetSelector& set, const ClipAnnotation& clip) {
  const std::size_t n = clip.events.size();
  return std::visit(
      Overloaded{
          [&](const AllOfType& s) -> Set {
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < n; ++i)
              if (clip.events[i].type_id == s.type_id) out.push_back(i);
            return out;
          },
          [&](const AllSide& s) -> Set {
            const Ref base = resolve_selector(*s.base, clip);
            if (!base.ok()) return std::nullopt;
            std::vector<std::size_t> out;
            if (s.dir == Direction::Before) {
              const std::size_t lo = s.immediate && base.index > 0 ? base.index - 1 : 0;
              for (std::size_t i = lo; i < base.index; ++i) out.push_back(i);
            } else {
              const std::size_t hi = s.immediate ? std::min(n, base.index + 2) : n;
              for (std::size_t i = base.index + 1; i < hi; ++i) out.push_back(i);
            }
            return out;
          },
          [&](const AttrFiltered& s) -> Set {
            const Ref base = resolve_selector(*s.base, clip);
            if (!base.ok()) return std::nullopt;
            const double ref = attribute(clip.events[base.index], s.attr);
            std::vector<std::size_t> out;
            for (std::size_t i = 0; i < n; ++i) {
              if (i == base.index) continue;
              const double v = attribute(clip.events[i], s.attr);
              if (ties(v, ref)) return std::nullopt;
              if (s.greater ? v > ref : v < ref) out.push_back(i);
            }
            return out;
          },
          [&](const AllEvents&) -> Set {
            std::vector<std::size_t> out(n);
            for (std::size_t i = 0; i < n; ++i) out[i] = i;
            return out;
          },
          [&](const TypeFiltered& s) -> Set {
            Set inner = resolve_set(*s.set, clip);
            if (!inner) return std::nullopt;
            std::erase_if(*inner, [&](std::size_t i) { return clip.events[i].type_id != s.type_id; });
            return inner;
          },
          [&](const Single& s) -> Set {
            const Ref base = resolve_selector(*s.base, clip);
            if (base.kind == Ref::Kind::Invalid) return std::nullopt;
            if (base.kind == Ref::Kind::Nothing) return std::vector<std::size_t>{};
            return std::vector<std::size_t>{base.index};
          },
      },
      set.node);
}

namespace {

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string count_label(std::size_t n) {
  if (n > static_cast<std::size_t>(clips::kMaxEvents))
    throw GenerationError("count answer " + std::to_string(n) + " exceeds 12");
  return std::to_string(n);
}

}  // namespace

std::optional<std::string> evaluate(const QuestionAst& ast, const ClipAnnotation& clip) {
  using R = std::optional<std::string>;
  return std::visit(
      Overloaded{
          [&](const Exist& r) -> R {
            const Set s = resolve_set(*r.set, clip);
            if (!s) return std::nullopt;
            return yes_no(!s->empty());
          },
          [&](const QueryType& r) -> R {
            const Ref ref = resolve_selector(*r.sel, clip);
            if (ref.kind == Ref::Kind::Invalid) return std::nullopt;
            if (ref.kind == Ref::Kind::Nothing) return std::string("nothing");
            return clip.events[ref.index].type_id;
          },
          [&](const Count& r) -> R {
            const Set s = resolve_set(*r.set, clip);
            if (!s) return std::nullopt;
            return count_label(s->size());
          },
          [&](const CompareAttr& r) -> R {
            const Ref a = resolve_selector(*r.a, clip);
            const Ref b = resolve_selector(*r.b, clip);
            if (!a.ok() || !b.ok() || a.index == b.index) return std::nullopt;
            const double va = attribute(clip.events[a.index], r.attr);
            const double vb = attribute(clip.events[b.index], r.attr);
            const bool tie = ties(va, vb);
            switch (r.order) {
              case Order::Equal: return yes_no(tie);
              case Order::Greater: return tie ? R{} : R{yes_no(va > vb)};
              case Order::Less: return tie ? R{} : R{yes_no(va < vb)};
            }
            return std::nullopt;
          },
          [&](const CompareSame& r) -> R {
            const Ref a = resolve_selector(*r.a, clip);
            const Ref b = resolve_selector(*r.b, clip);
            if (a.kind == Ref::Kind::Invalid || b.kind == Ref::Kind::Invalid) return std::nullopt;
            if (a.ok() && b.ok() && a.index == b.index) return std::nullopt;
            if (!a.ok() || !b.ok()) return yes_no(false);
            return yes_no(clip.events[a.index].type_id == clip.events[b.index].type_id);
          },
          [&](const CompareInt& r) -> R {
            const Set a = resolve_set(*r.a, clip);
            const Set b = resolve_set(*r.b, clip);
            if (!a || !b) return std::nullopt;
            switch (r.rel) {
              case CountRel::More: return yes_no(a->size() > b->size());
              case CountRel::Fewer: return yes_no(a->size() < b->size());
              case CountRel::Equal: return yes_no(a->size() == b->size());
            }
            return std::nullopt;
          },
      },
      ast.root);
}

std::string_view to_string(Mismatch::Kind k) {
  switch (k) {
    case Mismatch::Kind::WrongAnswer: return "WrongAnswer";
    case Mismatch::Kind::InvalidQuestion: return "InvalidQuestion";
    case Mismatch::Kind::MissingClip: return "MissingClip";
    case Mismatch::Kind::Malformed: return "Malformed";
  }
  return "?";
}

std::size_t VerifyReport::count(Mismatch::Kind k) const {
  return static_cast<std::size_t>(
      std::count_if(mismatches.begin(), mismatches.end(), [k](const Mismatch& m) { return m.kind == k; }));
}

VerifyReport verify_dataset(const std::vector<Json>& questions, const std::vector<ClipAnnotation>& clips) {
  std::unordered_map<std::string, const ClipAnnotation*> by_id;
  for (const auto& c : clips) by_id.emplace(c.clip_id, &c);

  VerifyReport report;
  for (const Json& q : questions) {
    ++report.total;
    Mismatch m;
    m.question_id = q.value("question_id", std::string("?"));
    m.recorded = q.contains("answer") && q["answer"].is_string() ? q["answer"].get<std::string>() : "";
    const auto it = by_id.find(q.value("clip_id", std::string()));
    if (it == by_id.end()) {
      m.kind = Mismatch::Kind::MissingClip;
      report.mismatches.push_back(std::move(m));
      continue;
    }
    std::optional<std::string> expected;
    try {
      expected = evaluate(ast_from_json(q.at("ast")), *it->second);
    } catch (const std::exception&) {
      m.kind = Mismatch::Kind::Malformed;
      report.mismatches.push_back(std::move(m));
      continue;
    }
    if (!expected) {
      m.kind = Mismatch::Kind::InvalidQuestion;
      report.mismatches.push_back(std::move(m));
    } else if (*expected != m.recorded) {
      m.kind = Mismatch::Kind::WrongAnswer;
      m.expected = *expected;
      report.mismatches.push_back(std::move(m));
    }
  }
  return report;
}

VerifyReport verify_dataset(const std::filesystem::path& questions_file,
                            const std::filesystem::path& annotations_file) {
  return verify_dataset(read_jsonl(questions_file), clips::read_annotations(annotations_file));
}

Json to_json(const VerifyReport& report) {
  Json list = Json::array();
  for (const auto& m : report.mismatches)
    list.push_back({{"kind", std::string(to_string(m.kind))},
                    {"question_id", m.question_id},
                    {"expected", m.expected},
                    {"recorded", m.recorded}});
  return {{"total", report.total},
          {"mismatch_count", report.mismatches.size()},
          {"missing_clips", report.count(Mismatch::Kind::MissingClip)},
          {"mismatches", list}};
}

}  // namespace daqa::oracle

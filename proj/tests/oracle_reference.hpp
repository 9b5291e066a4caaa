#pragma once

// Brute-force reference semantics for question ASTs. Every set reference is
// materialized by scanning all 2^n event subsets for the one whose membership
// matches the selector's defining predicate; singular references are found by
// scanning candidates. Written without sharing code with the library oracle.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "daqa/clips/annotation.hpp"
#include "daqa/questions/ast.hpp"

namespace daqa::test {

struct RefWorld {
  std::vector<std::string> type;
  std::vector<double> loud, dur;
  std::size_t size() const { return type.size(); }
};

inline RefWorld world_of(const clips::ClipAnnotation& c) {
  RefWorld w;
  for (const auto& e : c.events) {
    w.type.push_back(e.type_id);
    w.loud.push_back(e.loudness);
    w.dur.push_back(e.end_s - e.start_s);
  }
  return w;
}

inline bool ref_tied(double a, double b) {
  const double scale = std::fabs(a) > std::fabs(b) ? std::fabs(a) : std::fabs(b);
  return std::fabs(a - b) <= 1e-9 * scale;
}

struct RefSel {
  enum Kind { At, None, Bad } kind = Bad;
  std::size_t i = 0;
};

using RefMask = std::optional<std::uint32_t>;

class BruteForce {
 public:
  explicit BruteForce(RefWorld w) : w_(std::move(w)) {}

  double value(std::size_t i, questions::Attr a) const {
    return a == questions::Attr::Loudness ? w_.loud[i] : w_.dur[i];
  }

  RefSel sel(const questions::Selector& s) const {
    using namespace questions;
    const std::size_t n = w_.size();
    if (auto* p = std::get_if<ByType>(&s.node)) {
      RefSel out;
      int hits = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (w_.type[i] == p->type_id) {
          ++hits;
          out = {RefSel::At, i};
        }
      return hits == 1 ? out : RefSel{};
    }
    if (auto* p = std::get_if<ByOrdinal>(&s.node)) {
      for (std::size_t i = 0; i < n; ++i) {
        const bool is_last = i + 1 == n;
        if ((p->n == 0 && is_last) || (p->n > 0 && std::size_t(p->n) == i + 1)) return {RefSel::At, i};
      }
      return {};
    }
    if (auto* p = std::get_if<Relative>(&s.node)) {
      if (!p->immediate) return {};
      const RefSel b = sel(*p->base);
      if (b.kind != RefSel::At) return {};
      for (std::size_t i = 0; i < n; ++i) {
        const bool next = p->dir == Direction::After ? i == b.i + 1 : i + 1 == b.i;
        if (next) return {RefSel::At, i};
      }
      return {RefSel::None, 0};
    }
    const auto& p = std::get<Superlative>(s.node);
    for (std::size_t i = 0; i < n; ++i) {
      bool wins = true;
      for (std::size_t j = 0; j < n && wins; ++j) {
        if (j == i) continue;
        const double vi = value(i, p.attr), vj = value(j, p.attr);
        const bool better = p.extreme == Extreme::Max ? vi > vj : vi < vj;
        wins = better && !ref_tied(vi, vj);
      }
      if (wins) return {RefSel::At, i};
    }
    return {};
  }

  RefMask set(const questions::SetSelector& s) const {
    using namespace questions;
    const std::size_t n = w_.size();
    std::function<bool(std::size_t)> member;
    if (auto* p = std::get_if<AllOfType>(&s.node)) {
      member = [&, t = p->type_id](std::size_t i) { return w_.type[i] == t; };
    } else if (auto* p = std::get_if<AllSide>(&s.node)) {
      const RefSel b = sel(*p->base);
      if (b.kind != RefSel::At) return std::nullopt;
      member = [b, dir = p->dir, imm = p->immediate](std::size_t i) {
        if (dir == Direction::Before) return i < b.i && (!imm || i + 1 == b.i);
        return i > b.i && (!imm || i == b.i + 1);
      };
    } else if (auto* p = std::get_if<AttrFiltered>(&s.node)) {
      const RefSel b = sel(*p->base);
      if (b.kind != RefSel::At) return std::nullopt;
      for (std::size_t j = 0; j < n; ++j)
        if (j != b.i && ref_tied(value(j, p->attr), value(b.i, p->attr))) return std::nullopt;
      member = [this, b, attr = p->attr, gt = p->greater](std::size_t i) {
        if (i == b.i) return false;
        return gt ? value(i, attr) > value(b.i, attr) : value(i, attr) < value(b.i, attr);
      };
    } else if (std::holds_alternative<AllEvents>(s.node)) {
      member = [](std::size_t) { return true; };
    } else if (auto* p = std::get_if<TypeFiltered>(&s.node)) {
      const RefMask inner = set(*p->set);
      if (!inner) return std::nullopt;
      member = [&, m = *inner, t = p->type_id](std::size_t i) { return ((m >> i) & 1u) && w_.type[i] == t; };
    } else {
      const RefSel b = sel(*std::get<Single>(s.node).base);
      if (b.kind == RefSel::Bad) return std::nullopt;
      member = [b](std::size_t i) { return b.kind == RefSel::At && i == b.i; };
    }
    for (std::uint32_t m = 0; m < (1u << n); ++m) {
      bool match = true;
      for (std::size_t i = 0; i < n && match; ++i) match = bool((m >> i) & 1u) == member(i);
      if (match) return m;
    }
    return std::nullopt;
  }

  static int card(std::uint32_t m) {
    int c = 0;
    for (; m; m &= m - 1) ++c;
    return c;
  }

  std::optional<std::string> answer(const questions::QuestionAst& q) const {
    using namespace questions;
    using R = std::optional<std::string>;
    auto yn = [](bool b) { return std::string(b ? "yes" : "no"); };
    if (auto* r = std::get_if<Exist>(&q.root)) {
      const RefMask m = set(*r->set);
      return m ? R{yn(*m != 0)} : R{};
    }
    if (auto* r = std::get_if<QueryType>(&q.root)) {
      const RefSel s = sel(*r->sel);
      if (s.kind == RefSel::Bad) return {};
      return s.kind == RefSel::None ? std::string("nothing") : w_.type[s.i];
    }
    if (auto* r = std::get_if<Count>(&q.root)) {
      const RefMask m = set(*r->set);
      return m ? R{std::to_string(card(*m))} : R{};
    }
    if (auto* r = std::get_if<CompareAttr>(&q.root)) {
      const RefSel a = sel(*r->a), b = sel(*r->b);
      if (a.kind != RefSel::At || b.kind != RefSel::At || a.i == b.i) return {};
      const double va = value(a.i, r->attr), vb = value(b.i, r->attr);
      if (r->order == Order::Equal) return yn(ref_tied(va, vb));
      if (ref_tied(va, vb)) return {};
      return yn(r->order == Order::Greater ? va > vb : va < vb);
    }
    if (auto* r = std::get_if<CompareSame>(&q.root)) {
      const RefSel a = sel(*r->a), b = sel(*r->b);
      if (a.kind == RefSel::Bad || b.kind == RefSel::Bad) return {};
      if (a.kind == RefSel::At && b.kind == RefSel::At) {
        if (a.i == b.i) return {};
        return yn(w_.type[a.i] == w_.type[b.i]);
      }
      return yn(false);
    }
    const auto& r = std::get<CompareInt>(q.root);
    const RefMask a = set(*r.a), b = set(*r.b);
    if (!a || !b) return {};
    const int ca = card(*a), cb = card(*b);
    switch (r.rel) {
      case CountRel::More: return yn(ca > cb);
      case CountRel::Fewer: return yn(ca < cb);
      case CountRel::Equal: return yn(ca == cb);
    }
    return {};
  }

 private:
  RefWorld w_;
};

/// Selector and set pools for an exhaustive AST family of depth <= 3 over
/// the given types and ordinals (0 = last).
struct AstPools {
  std::vector<questions::SelectorPtr> leaf_sel, sel;   // depth 1, depth <= 2
  std::vector<questions::SetPtr> leaf_set, set;        // depth 1, depth <= 2
};

inline AstPools make_pools(const std::vector<std::string>& types, const std::vector<int>& ordinals) {
  using namespace questions;
  AstPools p;
  for (const auto& t : types) p.leaf_sel.push_back(by_type(t));
  for (int o : ordinals) p.leaf_sel.push_back(o == 0 ? last() : by_ordinal(o));
  for (auto a : {Attr::Duration, Attr::Loudness})
    for (auto e : {Extreme::Max, Extreme::Min}) p.leaf_sel.push_back(superlative(a, e));
  p.sel = p.leaf_sel;
  for (const auto& s : p.leaf_sel)
    for (auto d : {Direction::Before, Direction::After})
      for (bool imm : {true, false}) p.sel.push_back(relative(s, d, imm));

  for (const auto& t : types) p.leaf_set.push_back(all_of_type(t));
  p.leaf_set.push_back(all_events());
  p.set = p.leaf_set;
  for (const auto& s : p.leaf_sel) {
    for (auto d : {Direction::Before, Direction::After})
      for (bool imm : {true, false}) p.set.push_back(all_side(s, d, imm));
    for (auto a : {Attr::Duration, Attr::Loudness})
      for (bool gt : {true, false}) p.set.push_back(attr_filtered(a, gt, s));
    p.set.push_back(single(s));
  }
  for (const auto& t : types)
    for (const auto& s : p.leaf_set) p.set.push_back(type_filtered(t, s));
  return p;
}

/// Calls f on every root over the pools (children of depth <= 2).
template <class F>
void for_each_ast(const AstPools& p, F&& f) {
  using namespace questions;
  for (const auto& s : p.set) {
    f(QuestionAst{Exist{s}});
    f(QuestionAst{Count{s}});
  }
  for (const auto& s : p.sel) f(QuestionAst{QueryType{s}});
  for (const auto& a : p.sel)
    for (const auto& b : p.sel) {
      f(QuestionAst{CompareSame{a, b}});
      for (auto attr : {Attr::Duration, Attr::Loudness})
        for (auto o : {Order::Greater, Order::Less, Order::Equal}) f(QuestionAst{CompareAttr{a, b, attr, o}});
    }
  for (const auto& a : p.set)
    for (const auto& b : p.set)
      for (auto r : {CountRel::More, CountRel::Fewer, CountRel::Equal}) f(QuestionAst{CompareInt{a, b, r}});
}

/// Attribute patterns used to populate small worlds: distinct orders, exact
/// ties, a tie inside the tolerance and a near-tie just outside it.
inline std::vector<std::vector<double>> attribute_patterns(std::size_t n) {
  std::vector<std::vector<double>> out;
  auto add = [&](std::function<double(std::size_t)> g) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g(i);
    out.push_back(v);
  };
  add([](std::size_t i) { return 1.0 + double(i); });
  add([n](std::size_t i) { return double(n - i); });
  add([](std::size_t i) { return 2.0 + double((i * 3) % 5); });
  add([](std::size_t) { return 3.0; });
  add([](std::size_t i) { return i < 2 ? 5.0 : 1.0 + double(i); });
  add([n](std::size_t i) { return i + 1 >= n ? 0.5 : 2.0 + double(i); });
  add([](std::size_t i) { return i == 1 ? 4.0 * (1.0 + 1e-12) : (i == 2 ? 4.0 : 1.0 + 0.25 * double(i)); });
  add([](std::size_t i) { return i == 1 ? 4.0 * (1.0 + 1e-7) : (i == 2 ? 4.0 : 6.0 - double(i)); });
  return out;
}

/// Every world with up to `max_events` events over `types`, attributes
/// drawn from attribute_patterns (loudness pattern k, duration pattern k+3).
inline std::vector<clips::ClipAnnotation> small_worlds(const std::vector<std::string>& types, std::size_t max_events) {
  std::vector<clips::ClipAnnotation> worlds;
  for (std::size_t n = 0; n <= max_events; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= types.size();
    const auto pats = attribute_patterns(n);
    for (std::size_t c = 0; c < combos; ++c)
      for (std::size_t k = 0; k < pats.size(); ++k) {
        clips::ClipAnnotation a;
        a.clip_id = "w" + std::to_string(worlds.size());
        std::size_t code = c;
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          clips::EventOccurrence e;
          e.type_id = types[code % types.size()];
          code /= types.size();
          e.instance_index = int(i);
          e.start_s = t;
          e.end_s = t + pats[(k + 3) % pats.size()][i];
          e.loudness = pats[k][i];
          e.ordinal = int(i) + 1;
          t = e.end_s;
          a.events.push_back(e);
        }
        a.total_duration_s = t;
        worlds.push_back(std::move(a));
      }
  }
  return worlds;
}

}  // namespace daqa::test

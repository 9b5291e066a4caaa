#include "daqa/questions/balance.hpp"

#include <algorithm>
#include <climits>

#include "daqa/common/error.hpp"

namespace daqa::questions {

double support_gap(const std::map<std::string, int>& histogram, const std::vector<std::string>& support,
                   double denominator) {
  if (denominator <= 0.0 || support.empty()) return 0.0;
  int lo = INT_MAX, hi = 0;
  for (const auto& label : support) {
    const auto it = histogram.find(label);
    const int c = it == histogram.end() ? 0 : it->second;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return (hi - lo) / denominator;
}

void BalanceState::declare(const std::string& template_id, std::vector<std::string> support) {
  auto& e = entries_[template_id];
  e.support = std::move(support);
}

const BalanceState::Entry& BalanceState::entry(const std::string& template_id) const {
  const auto it = entries_.find(template_id);
  if (it == entries_.end()) throw Error("balance: template '" + template_id + "' was not declared");
  return it->second;
}

bool BalanceState::would_accept(const std::string& template_id, const std::string& answer) const {
  const Entry& e = entry(template_id);
  if (std::find(e.support.begin(), e.support.end(), answer) == e.support.end()) return false;
  auto counts = e.counts;
  ++counts[answer];
  const double denom = std::max(e.total + 1, config_.warmup);
  return support_gap(counts, e.support, denom) <= config_.gap_threshold + 1e-12;
}

bool BalanceState::accept(const std::string& template_id, const std::string& answer) {
  if (!would_accept(template_id, answer)) return false;
  Entry& e = entries_.at(template_id);
  ++e.counts[answer];
  ++e.total;
  return true;
}

int BalanceState::total(const std::string& template_id) const { return entry(template_id).total; }

double BalanceState::gap(const std::string& template_id) const {
  const Entry& e = entry(template_id);
  return support_gap(e.counts, e.support, e.total);
}

const std::map<std::string, int>& BalanceState::histogram(const std::string& template_id) const {
  return entry(template_id).counts;
}

}  // namespace daqa::questions

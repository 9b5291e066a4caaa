#pragma once

#include <map>
#include <string>
#include <vector>

namespace daqa::questions {

struct BalanceConfig {
  double gap_threshold = 0.05;
  int warmup = 50;
};

/// (max - min) / denominator over `support`; 0 when the denominator is 0.
double support_gap(const std::map<std::string, int>& histogram, const std::vector<std::string>& support,
                   double denominator);

/// Online per-template answer histograms.
///
/// A candidate is accepted iff it lies in the template's support and, after
/// counting it, (max - min) / max(total, warmup) <= gap_threshold. Once a
/// template has `warmup` answers this is exactly the (max - min) / total rule;
/// before that the floored denominator lets the histogram fill up while
/// keeping the spread within a few counts.
class BalanceState {
 public:
  explicit BalanceState(BalanceConfig config = {}) : config_(config) {}

  void declare(const std::string& template_id, std::vector<std::string> support);
  bool declared(const std::string& template_id) const { return entries_.count(template_id) > 0; }

  bool would_accept(const std::string& template_id, const std::string& answer) const;
  /// Commits the answer when accepted.
  bool accept(const std::string& template_id, const std::string& answer);

  int total(const std::string& template_id) const;
  /// (max - min) / total over the support (the reported statistic).
  double gap(const std::string& template_id) const;
  const std::map<std::string, int>& histogram(const std::string& template_id) const;
  const BalanceConfig& config() const { return config_; }

 private:
  struct Entry {
    std::vector<std::string> support;
    std::map<std::string, int> counts;
    int total = 0;
  };
  const Entry& entry(const std::string& template_id) const;

  BalanceConfig config_;
  std::map<std::string, Entry> entries_;
};

}  // namespace daqa::questions

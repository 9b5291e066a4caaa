#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daqa/clips/annotation.hpp"
#include "daqa/clips/composer.hpp"
#include "daqa/common/rng.hpp"
#include "daqa/questions/balance.hpp"
#include "daqa/questions/catalog.hpp"
#include "daqa/questions/text.hpp"

namespace daqa::questions {

struct QuestionInstance {
  std::string question_id;
  std::string clip_id;
  std::string template_id;
  Skill skill = Skill::Exist;
  std::vector<std::string> tokens;
  QuestionAst ast;
  std::string answer;
  Bindings bindings;  // not serialized
};

Json to_json(const QuestionInstance& q);
QuestionInstance question_from_json(const Json& j);
std::vector<QuestionInstance> read_questions(const std::filesystem::path& path);
void write_questions(const std::filesystem::path& path, const std::vector<QuestionInstance>& questions);

enum class Rejection { NoValidBinding, BalanceRejected };
std::string_view to_string(Rejection r);

struct EngineContext {
  const events::Taxonomy& taxonomy;
  const Catalog& catalog;
  const SynonymTable& synonyms;
  double synonym_p = 0.5;
};

struct Instantiation {
  std::optional<QuestionInstance> question;  // question_id left empty
  std::optional<Rejection> rejection;
};

/// Every binding for which the family procedure yields an answer, in a fixed
/// enumeration order, together with that answer.
std::vector<std::pair<Bindings, std::string>> valid_bindings(const QuestionTemplate& t,
                                                             const clips::ClipAnnotation& clip,
                                                             const events::Taxonomy& taxonomy);

/// Samples a valid binding uniformly, answers it with the family procedure
/// and submits the answer to the balance state (declaring the template on
/// first use).
Instantiation instantiate(const QuestionTemplate& t, const clips::ClipAnnotation& clip, Rng& rng,
                          BalanceState& balance, const EngineContext& ctx);

struct GenerationConfig {
  int attempts_train = 5;
  int attempts_val = 10;
  int attempts_test = 10;
  int template_draws = 20;
  std::uint64_t master_seed = 0;
  BalanceConfig balance;
  int attempts(clips::SplitName s) const;
};

struct SplitQuestions {
  clips::SplitName split = clips::SplitName::Train;
  std::vector<QuestionInstance> questions;
  std::size_t no_valid_binding = 0;
  std::size_t balance_rejected = 0;
  BalanceState balance;
};

/// Generates questions for one split, clip by clip in index order. Every
/// emitted question is re-answered by the oracle; a disagreement throws
/// GenerationError naming the question.
SplitQuestions generate_questions(const std::vector<clips::ClipAnnotation>& clips, clips::SplitName split,
                                  const GenerationConfig& config, const EngineContext& ctx);

struct TemplateBalance {
  std::string template_id;
  int total = 0;
  double gap = 0.0;
  bool past_warmup = false;
};

/// Recomputes per-template answer gaps from emitted questions.
std::vector<TemplateBalance> rescan_balance(const std::vector<QuestionInstance>& questions, const Catalog& catalog,
                                            const BalanceConfig& config);

}  // namespace daqa::questions

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daqa/clips/annotation.hpp"
#include "daqa/questions/ast.hpp"

namespace daqa::oracle {

/// Result of resolving a singular reference.
struct Ref {
  enum class Kind { Occurrence, Nothing, Invalid };
  Kind kind = Kind::Invalid;
  std::size_t index = 0;  // position in annotation.events when kind == Occurrence

  static Ref occurrence(std::size_t i) { return {Kind::Occurrence, i}; }
  static Ref nothing() { return {Kind::Nothing, 0}; }
  static Ref invalid() { return {Kind::Invalid, 0}; }
  bool ok() const { return kind == Kind::Occurrence; }
  bool operator==(const Ref&) const = default;
};

/// Attribute values within this relative distance are treated as equal.
inline constexpr double kTieTolerance = 1e-9;
bool ties(double a, double b);

double attribute(const clips::EventOccurrence& e, questions::Attr attr);

Ref resolve_selector(const questions::Selector& sel, const clips::ClipAnnotation& clip);

/// Sorted event positions, or nullopt when the set reference is ill-posed.
std::optional<std::vector<std::size_t>> resolve_set(const questions::SetSelector& set,
                                                    const clips::ClipAnnotation& clip);

/// Answer label ("yes", "no", a type id, "nothing", "0".."12"), or nullopt
/// for an ill-posed question. Throws GenerationError if a count exceeds 12.
std::optional<std::string> evaluate(const questions::QuestionAst& ast, const clips::ClipAnnotation& clip);

struct Mismatch {
  enum class Kind { WrongAnswer, InvalidQuestion, MissingClip, Malformed };
  Kind kind = Kind::WrongAnswer;
  std::string question_id;
  std::string expected;  // oracle answer (empty when not computable)
  std::string recorded;  // answer stored in the question file
};
std::string_view to_string(Mismatch::Kind k);

struct VerifyReport {
  std::size_t total = 0;
  std::vector<Mismatch> mismatches;
  std::size_t count(Mismatch::Kind k) const;
  bool consistent() const { return mismatches.empty(); }
};

/// Re-evaluates every question row ({question_id, clip_id, ast, answer, ...})
/// against the annotation of its clip.
VerifyReport verify_dataset(const std::vector<Json>& questions, const std::vector<clips::ClipAnnotation>& clips);
VerifyReport verify_dataset(const std::filesystem::path& questions_file,
                            const std::filesystem::path& annotations_file);

Json to_json(const VerifyReport& report);

}  // namespace daqa::oracle

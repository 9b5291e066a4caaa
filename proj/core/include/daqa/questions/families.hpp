#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "daqa/clips/annotation.hpp"
#include "daqa/questions/catalog.hpp"

namespace daqa::questions {

/// A template family's direct answer procedure: answer label for the given
/// bindings, or nullopt when the instantiation is ill-posed on this clip.
/// These are written against the annotation directly and never consult the
/// AST, so they serve as the second path checked against the oracle.
using Family = std::function<std::optional<std::string>(const Bindings&, const clips::ClipAnnotation&)>;

const Family* find_family(std::string_view name);
std::vector<std::string> family_names();

}  // namespace daqa::questions

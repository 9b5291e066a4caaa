#pragma once

#include <filesystem>

#include "daqa/common/io.hpp"
#include "daqa/nn/params.hpp"

namespace daqa::nn {

// Layout: u64 little-endian header length, JSON header, raw little-endian
// payload. Header: {"format", "precision", "meta", "tensors": [{name, kind,
// shape, offset, bytes}]}; offsets are relative to the payload start.

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params, const Json& meta = Json::object());

/// Loads values by name into `params`; every parameter and buffer must be
/// present with a matching shape. Returns the stored meta object.
template <class T>
Json load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params);

/// Header only.
Json read_checkpoint_header(const std::filesystem::path& path);

}  // namespace daqa::nn

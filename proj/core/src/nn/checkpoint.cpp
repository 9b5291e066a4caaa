#include "daqa/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "daqa/common/error.hpp"

namespace daqa::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr const char* kFormat = "daqa-checkpoint-v1";

template <class T>
constexpr const char* precision_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

struct Raw {
  Json header;
  std::vector<char> payload;
};

Raw read_raw(const std::filesystem::path& path, bool with_payload) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || len > (1u << 30)) throw LoadError("corrupt checkpoint header in " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw LoadError("truncated checkpoint header in " + path.string());
  Raw raw;
  try {
    raw.header = Json::parse(text);
  } catch (const Json::exception& e) {
    throw LoadError("checkpoint header of " + path.string() + " is not JSON: " + e.what());
  }
  if (raw.header.value("format", "") != kFormat) throw LoadError(path.string() + " is not a daqa checkpoint");
  if (with_payload) raw.payload.assign(std::istreambuf_iterator<char>(in), {});
  return raw;
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params, const Json& meta) {
  Json tensors = Json::array();
  std::vector<const Tensor<T>*> order;
  std::uint64_t offset = 0;
  auto entry = [&](const std::string& name, const char* kind, const Tensor<T>& t) {
    const std::uint64_t bytes = t.numel() * sizeof(T);
    tensors.push_back({{"name", name}, {"kind", kind}, {"shape", t.shape()}, {"offset", offset}, {"bytes", bytes}});
    offset += bytes;
    order.push_back(&t);
  };
  for (const auto& [name, v] : params.params()) entry(name, "param", v->value);
  for (const auto& [name, t] : params.buffers()) entry(name, "buffer", *t);
  const Json header = {{"format", kFormat}, {"precision", precision_name<T>()}, {"meta", meta}, {"tensors", tensors}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write checkpoint " + path.string());
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* t : order) out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->numel() * sizeof(T)));
  if (!out) throw LoadError("failed writing checkpoint " + path.string());
}

template <class T>
Json load_checkpoint(const std::filesystem::path& path, ParamSet<T>& params) {
  Raw raw = read_raw(path, true);
  if (raw.header.value("precision", "") != precision_name<T>())
    throw LoadError("checkpoint " + path.string() + " has precision " + raw.header.value("precision", "?"));
  std::map<std::string, const Json*> by_name;
  for (const auto& t : raw.header.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;

  auto fill = [&](const std::string& name, Tensor<T>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw LoadError("checkpoint " + path.string() + " lacks tensor " + name);
    const Json& e = *it->second;
    const auto shape = e.at("shape").get<Shape>();
    if (shape != dst.shape())
      throw ShapeError("checkpoint tensor " + name + " has shape " + shape_str(shape) + ", model expects " + shape_str(dst.shape()));
    const auto off = e.at("offset").get<std::uint64_t>();
    const auto bytes = e.at("bytes").get<std::uint64_t>();
    if (bytes != dst.numel() * sizeof(T) || off + bytes > raw.payload.size())
      throw LoadError("checkpoint tensor " + name + " exceeds the payload");
    std::memcpy(dst.data(), raw.payload.data() + off, bytes);
  };
  for (const auto& [name, v] : params.params()) fill(name, v->value);
  for (auto& [name, t] : params.buffers()) fill(name, *t);
  return raw.header.value("meta", Json::object());
}

Json read_checkpoint_header(const std::filesystem::path& path) { return read_raw(path, false).header; }

template void save_checkpoint<float>(const std::filesystem::path&, const ParamSet<float>&, const Json&);
template void save_checkpoint<double>(const std::filesystem::path&, const ParamSet<double>&, const Json&);
template Json load_checkpoint<float>(const std::filesystem::path&, ParamSet<float>&);
template Json load_checkpoint<double>(const std::filesystem::path&, ParamSet<double>&);

}  // namespace daqa::nn

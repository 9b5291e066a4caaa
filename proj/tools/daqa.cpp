#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "daqa/common/error.hpp"
#include "daqa/pipeline/config.hpp"
#include "daqa/pipeline/stages.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> scale;
  bool low_resource = false;
  std::vector<std::string> overrides;
  std::string output;
  bool print_config = false;
};

daqa::pipeline::RunConfig resolve(const Options& o) {
  using namespace daqa::pipeline;
  std::filesystem::path base;
  daqa::Json j = default_config_json();
  if (!o.config.empty()) {
    j = load_config_json(o.config);
    base = std::filesystem::path(o.config).parent_path();
  }
  for (const auto& a : o.overrides) apply_override(j, a);
  if (o.seed) j["master_seed"] = *o.seed;
  if (o.scale) j["model"]["scale"] = *o.scale;
  if (o.low_resource) j["low_resource"] = true;
  if (!o.output.empty()) {
    j["output"] = o.output;
    base.clear();
  }
  return RunConfig::from_json(j, base);
}

int run(const std::vector<std::string>& stages, const Options& o) {
  const auto cfg = resolve(o);
  if (o.print_config) std::cout << cfg.resolved.dump(2) << '\n';
  for (const auto& s : stages) {
    const int rc = daqa::pipeline::run_stage(s, cfg, std::cout);
    if (rc != kOk) return rc;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic audio question answering: dataset generation, training and evaluation"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, "JSON config file patched over the defaults")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--scale", o.scale, "divide every model width by this factor")->check(CLI::PositiveNumber);
  app.add_flag("--low-resource", o.low_resource, "one question per training clip");
  app.add_option("-s,--set", o.overrides, "override a config key, e.g. train.epochs=3 (repeatable)")
      ->allow_extra_args(false);
  app.add_option("-o,--output", o.output, "output root directory");
  app.add_flag("--print-config", o.print_config, "print the resolved config before running");
  app.fallthrough();

  std::vector<std::string> selected;
  for (const auto& name : daqa::pipeline::stage_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " stage");
    sub->callback([&selected, name] { selected = {name}; });
  }
  auto* all = app.add_subcommand("all", "run every stage in order");
  all->add_flag("--skip-train", "stop after stats (dataset only)");
  all->callback([&selected, all] {
    for (const auto& n : daqa::pipeline::stage_names()) {
      if (all->count("--skip-train") && (n == "train" || n == "saliency")) continue;
      selected.push_back(n);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    auto opts = o;
    if (all->parsed() && all->count("--skip-train")) opts.overrides.push_back("eval.model=false");
    return run(selected, opts);
  } catch (const daqa::pipeline::StageError& e) {
    std::cerr << "daqa: " << e.what() << '\n';
    return kUsage;
  } catch (const daqa::SchemaError& e) {
    std::cerr << "daqa: config error: " << e.what() << '\n';
    return kUsage;
  } catch (const daqa::LoadError& e) {
    std::cerr << "daqa: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "daqa: " << e.what() << '\n';
    return kValidation;
  }
}

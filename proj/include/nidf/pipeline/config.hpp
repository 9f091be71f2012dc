#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nidf/network/trainer.hpp"
#include "nidf/psf/estimation.hpp"
#include "nidf/synthesis/dataset.hpp"

namespace nidf::pipeline {

using json = nlohmann::json;

enum class PsfMethod { fft, exemplar };

inline PsfMethod parse_method(const std::string& s) {
  if (s == "fft") return PsfMethod::fft;
  if (s == "exemplar") return PsfMethod::exemplar;
  throw InvalidInput("unknown psf method '" + s + "' (fft|exemplar)");
}

inline std::string to_string(PsfMethod m) { return m == PsfMethod::fft ? "fft" : "exemplar"; }

struct EvalConfig {
  bool estimate_psf = false;  // also estimate the kernel per sample and report KS
  PsfMethod psf_method = PsfMethod::exemplar;
  int threads = 0;  // 0: hardware concurrency
};

// Every tunable of every stage. Loaded from one JSON document; anything not
// given keeps its default.
struct RunConfig {
  std::uint64_t seed = 0;
  synthesis::SynthConfig synth;
  net::NetArch arch;
  net::TrainConfig train;
  psf::HqsConfig hqs;
  EvalConfig eval;

  void validate() const {
    if (synth.size < 16) throw InvalidInput("config: synth.size must be >= 16");
    if (synth.channels != 1 && synth.channels != 3) throw InvalidInput("config: synth.channels must be 1 or 3");
    if (synth.max_half_side != 0 &&
        (synth.max_half_side < synthesis::WalkParams::kMinHalfSide ||
         synth.max_half_side > synthesis::WalkParams::kMaxHalfSide))
      throw InvalidInput("config: synth.max_half_side must be 0 or in [3, 24]");
    synthesis::WalkParams{3, synth.walk_steps, synth.walk_inertia, synth.walk_jitter, 0}.validate();
    arch.validate();
    train.validate();
    hqs.validate();
    if (eval.threads < 0) throw InvalidInput("config: eval.threads must be >= 0");
  }
};

inline json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"synth",
       {{"size", c.synth.size},
        {"max_half_side", c.synth.max_half_side},
        {"channels", c.synth.channels},
        {"walk_steps", c.synth.walk_steps},
        {"walk_inertia", c.synth.walk_inertia},
        {"walk_jitter", c.synth.walk_jitter}}},
      {"arch",
       {{"levels", c.arch.levels},
        {"base_channels", c.arch.base_channels},
        {"image_channels", c.arch.image_channels},
        {"residual", c.arch.residual}}},
      {"train",
       {{"stage", net::to_string(c.train.stage)},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"precision", c.train.precision},
        {"threads", c.train.threads}}},
      {"hqs",
       {{"lambda0", c.hqs.lambda0},
        {"mu_exemplar", c.hqs.mu_exemplar},
        {"beta0", c.hqs.beta0},
        {"beta_growth", c.hqs.beta_growth},
        {"beta_max", c.hqs.beta_max},
        {"outer_iters", c.hqs.outer_iters},
        {"kernel_ridge", c.hqs.kernel_ridge},
        {"kernel_prune", c.hqs.kernel_prune},
        {"epsilon_wiener", c.hqs.epsilon_wiener},
        {"gradient_domain", c.hqs.gradient_domain}}},
      {"eval",
       {{"estimate_psf", c.eval.estimate_psf},
        {"psf_method", to_string(c.eval.psf_method)},
        {"threads", c.eval.threads}}},
  };
}

namespace detail {

// Integers are accepted where floats are expected, not the other way round.
inline bool compatible(const json& want, const json& got) {
  if (want.is_boolean()) return got.is_boolean();
  if (want.is_string()) return got.is_string();
  if (want.is_number_integer()) return got.is_number_integer();
  if (want.is_number()) return got.is_number();
  if (want.is_object()) return got.is_object();
  return false;
}

inline void check_against(const json& schema, const json& doc, const std::string& prefix) {
  if (!doc.is_object()) throw InvalidInput("config: " + (prefix.empty() ? std::string("document") : prefix) + " must be an object");
  for (const auto& [key, value] : doc.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) throw InvalidInput("config: unknown key '" + path + "'");
    const json& want = schema.at(key);
    if (!compatible(want, value)) throw InvalidInput("config: wrong type for '" + path + "'");
    if (want.is_number_unsigned() && !value.is_number_unsigned())
      throw InvalidInput("config: '" + path + "' must be nonnegative");
    if (want.is_object()) check_against(want, value, path);
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  out = j.at(key).get<T>();
}

}  // namespace detail

inline RunConfig from_json(const json& doc) {
  RunConfig c;
  detail::check_against(to_json(c), doc, "");
  json j = to_json(c);
  j.merge_patch(doc);

  detail::get(j, "seed", c.seed);
  const json& s = j["synth"];
  detail::get(s, "size", c.synth.size);
  detail::get(s, "max_half_side", c.synth.max_half_side);
  detail::get(s, "channels", c.synth.channels);
  detail::get(s, "walk_steps", c.synth.walk_steps);
  detail::get(s, "walk_inertia", c.synth.walk_inertia);
  detail::get(s, "walk_jitter", c.synth.walk_jitter);
  const json& a = j["arch"];
  detail::get(a, "levels", c.arch.levels);
  detail::get(a, "base_channels", c.arch.base_channels);
  detail::get(a, "image_channels", c.arch.image_channels);
  detail::get(a, "residual", c.arch.residual);
  const json& t = j["train"];
  c.train.stage = net::parse_stage(t.at("stage").get<std::string>());
  detail::get(t, "learning_rate", c.train.learning_rate);
  detail::get(t, "batch_size", c.train.batch_size);
  detail::get(t, "epochs", c.train.epochs);
  detail::get(t, "precision", c.train.precision);
  detail::get(t, "threads", c.train.threads);
  const json& h = j["hqs"];
  detail::get(h, "lambda0", c.hqs.lambda0);
  detail::get(h, "mu_exemplar", c.hqs.mu_exemplar);
  detail::get(h, "beta0", c.hqs.beta0);
  detail::get(h, "beta_growth", c.hqs.beta_growth);
  detail::get(h, "beta_max", c.hqs.beta_max);
  detail::get(h, "outer_iters", c.hqs.outer_iters);
  detail::get(h, "kernel_ridge", c.hqs.kernel_ridge);
  detail::get(h, "kernel_prune", c.hqs.kernel_prune);
  detail::get(h, "epsilon_wiener", c.hqs.epsilon_wiener);
  detail::get(h, "gradient_domain", c.hqs.gradient_domain);
  const json& e = j["eval"];
  detail::get(e, "estimate_psf", c.eval.estimate_psf);
  c.eval.psf_method = parse_method(e.at("psf_method").get<std::string>());
  detail::get(e, "threads", c.eval.threads);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

// "hqs.lambda0=0.004", "eval.psf_method=fft". The value is read as JSON when
// it parses, else as a bare string.
inline RunConfig apply_override(const RunConfig& base, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidInput("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1))
    parts.push_back(rest.substr(0, dot));
  parts.push_back(rest);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};

  json doc = to_json(base);
  detail::check_against(doc, patch, "");
  doc.merge_patch(patch);
  return from_json(doc);
}

inline std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace nidf::pipeline

#include "optrc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "optrc/error.hpp"

namespace optrc {

namespace {

using nlohmann::json;

json yaml_scalar(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "null" || text == "~") return nullptr;
  if (!text.empty() && text[0] != '-') {
    std::uint64_t u = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), u);
    if (ec == std::errc() && end == text.data() + text.size()) return u;
  }
  std::int64_t i = 0;
  {
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
    if (ec == std::errc() && end == text.data() + text.size()) return i;
  }
  double d = 0.0;
  {
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec == std::errc() && end == text.data() + text.size() && std::isfinite(d)) return d;
  }
  return text;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null:
      return nullptr;
    case YAML::NodeType::Scalar:
      return yaml_scalar(node);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

std::string type_name(const json& v) {
  if (v.is_number_unsigned()) return "non-negative integer";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

bool same_kind(const json& expected, const json& value) {
  if (expected.is_number_unsigned()) return value.is_number_unsigned();
  if (expected.is_number_integer()) return value.is_number_integer();
  if (expected.is_number_float()) return value.is_number();
  if (expected.is_boolean()) return value.is_boolean();
  if (expected.is_string()) return value.is_string();
  if (expected.is_array()) return value.is_array();
  if (expected.is_object()) return value.is_object() || value.is_null();
  return true;
}

void collect_leaves(const json& node, const std::string& path, std::vector<std::string>& out) {
  if (node.is_object() && !node.empty()) {
    for (const auto& item : node.items()) collect_leaves(item.value(), path + "." + item.key(), out);
  } else {
    out.push_back(path);
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_leaf(const json& expected, const json& value, const std::string& path) {
  if (!same_kind(expected, value))
    throw ConfigError("config field '" + path + "' must be a " + type_name(expected) + ", got " + type_name(value));
  if (expected.is_array() && !expected.empty())
    for (std::size_t i = 0; i < value.size(); ++i)
      if (!same_kind(expected.front(), value[i]))
        throw ConfigError("config field '" + path + "[" + std::to_string(i) + "]' must be a " +
                          type_name(expected.front()) + ", got " + type_name(value[i]));
}

/// Overlays `user` on `defaults` in place, rejecting keys the defaults lack.
void merge(json& defaults, const json& user, const std::string& path, std::vector<std::string>& defaulted) {
  std::vector<std::string> known;
  for (const auto& item : defaults.items()) known.push_back(item.key());
  for (const auto& item : user.items())
    if (!defaults.contains(item.key()))
      throw ConfigError("unknown config key '" + join(path, item.key()) + "'" + nearest_key_hint(item.key(), known));

  for (auto& item : defaults.items()) {
    const std::string child = join(path, item.key());
    if (!user.contains(item.key())) {
      collect_leaves(item.value(), child, defaulted);
      continue;
    }
    const json& value = user.at(item.key());
    if (child == "grid") {
      if (!value.is_object() && !value.is_null()) throw ConfigError("config field 'grid' must be a mapping");
      item.value() = json::object();
      if (value.is_null()) continue;
      for (const auto& axis : value.items()) {
        if (!axis.value().is_array())
          throw ConfigError("grid dimension '" + axis.key() + "' must be a list of values");
        item.value()[axis.key()] = axis.value();
      }
      continue;
    }
    check_leaf(item.value(), value, child);
    if (item.value().is_object()) {
      merge(item.value(), value.is_null() ? json::object() : value, child, defaulted);
    } else {
      item.value() = value;
    }
  }
}

EncodingSpec spec_from(const json& j) {
  EncodingSpec s;
  s.kind = encoding_kind_from_string(j.at("kind").get<std::string>());
  s.n_bin = j.at("n_bin").get<int>();
  s.phase_range = j.at("phase_range").get<double>();
  return s;
}

ExperimentConfig build(const json& j, const ExperimentConfig& preset) {
  ExperimentConfig c = preset;
  c.master_seed = j.at("seed").get<std::uint64_t>();
  c.alpha = j.at("alpha").get<double>();
  c.horizons = j.at("horizons").get<std::vector<int>>();
  c.train_length = j.at("train_length").get<std::size_t>();
  c.test_length = j.at("test_length").get<std::size_t>();
  c.n_test_windows = j.at("n_test_windows").get<std::size_t>();
  c.averaging_runs = j.at("averaging_runs").get<std::size_t>();
  c.lyapunov_exponent = j.at("lyapunov_exponent").get<double>();
  c.predictor = predictor_from_string(j.at("predictor").get<std::string>());
  c.center_features = j.at("center_features").get<bool>();
  c.n_traces = j.at("n_traces").get<std::size_t>();
  const auto band = j.at("validation_band").get<std::vector<int>>();
  if (band.size() != 2) throw ConfigError("config field 'validation_band' must hold two horizons [lo, hi]");
  c.validation_band = {band[0], band[1]};
  c.grid.clear();
  for (const auto& axis : j.at("grid").items())
    c.grid[axis.key()] = axis.value().get<std::vector<json>>();

  const json& mg = j.at("mackey_glass");
  c.mackey_glass.beta = mg.at("beta").get<double>();
  c.mackey_glass.gamma = mg.at("gamma").get<double>();
  c.mackey_glass.tau = mg.at("tau").get<double>();
  c.mackey_glass.n_exp = mg.at("n_exp").get<double>();
  c.mackey_glass.dt = mg.at("dt").get<double>();
  c.mackey_glass.sample_stride = mg.at("sample_stride").get<int>();
  c.mackey_glass.warmup_steps = mg.at("warmup_steps").get<int>();

  const json& r = j.at("reservoir");
  ReservoirConfig& rc = c.reservoir;
  rc.n_res = r.at("n_res").get<std::size_t>();
  rc.input_dim = r.at("input_dim").get<std::size_t>();
  rc.leak_rate = r.at("leak_rate").get<double>();
  rc.backend = backend_from_string(r.at("backend").get<std::string>());
  rc.spec_in = spec_from(r.at("encoding_in"));
  rc.spec_res = spec_from(r.at("encoding_res"));
  rc.layout = layout_from_string(r.at("layout").get<std::string>());
  rc.warmup_discard = r.at("warmup_discard").get<std::size_t>();
  rc.noise.additive_sigma = r.at("noise").at("additive_sigma").get<double>();
  rc.noise.quantize_bits = r.at("noise").at("quantize_bits").get<int>();
  rc.noise.saturation_level = r.at("noise").at("saturation_level").get<double>();
  rc.camera = camera_from_string(r.at("camera").get<std::string>());
  rc.camera_gain = r.at("camera_gain").get<double>();
  rc.scale_percentile = r.at("scale_percentile").get<double>();
  rc.esn.spectral_radius = r.at("esn").at("spectral_radius").get<double>();
  rc.esn.input_scale = r.at("esn").at("input_scale").get<double>();
  rc.esn.density = r.at("esn").at("density").get<double>();
  rc.esn.bias_scale = r.at("esn").at("bias_scale").get<double>();
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"slm", "dmd-basket"}; }

ExperimentConfig preset_config(std::string_view name) {
  if (name == "slm") return ExperimentConfig::slm();
  if (name == "dmd-basket") return ExperimentConfig::dmd_basket();
  throw ConfigError("unknown preset '" + std::string(name) + "'" + nearest_key_hint(name, preset_names()));
}

ParsedConfig config_from_json(const json& user_in, std::string_view preset_override) {
  const json user = user_in.is_null() ? json::object() : user_in;
  if (!user.is_object()) throw ConfigError("config root must be a mapping");

  ParsedConfig parsed;
  parsed.preset = "slm";
  json body = user;
  if (body.contains("preset")) {
    if (!body["preset"].is_string()) throw ConfigError("config field 'preset' must be a string");
    parsed.preset = body["preset"].get<std::string>();
    body.erase("preset");
  }
  if (!preset_override.empty()) parsed.preset = std::string(preset_override);

  const ExperimentConfig preset = preset_config(parsed.preset);
  json resolved = preset.to_json();
  merge(resolved, body, "", parsed.defaults_applied);
  try {
    parsed.config = build(resolved, preset);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  parsed.config.validate();
  parsed.resolved = parsed.config.to_json();
  parsed.resolved["preset"] = parsed.preset;
  return parsed;
}

ParsedConfig parse_config_string(std::string_view yaml, std::string_view preset_override) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  return config_from_json(yaml_to_json(root), preset_override);
}

ParsedConfig parse_config(const std::filesystem::path& path, std::string_view preset_override) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << is.rdbuf();
  try {
    return parse_config_string(text.str(), preset_override);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string nearest_key_hint(std::string_view key, const std::vector<std::string>& candidates) {
  const std::string* best = nullptr;
  std::size_t best_d = 0;
  for (const std::string& c : candidates) {
    const std::size_t d = edit_distance(key, c);
    if (!best || d < best_d) {
      best = &c;
      best_d = d;
    }
  }
  if (!best || best_d > std::max<std::size_t>(3, key.size() / 2)) return {};
  return "; did you mean '" + *best + "'?";
}

}  // namespace optrc

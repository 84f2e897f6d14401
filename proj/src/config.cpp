#include "iswsst/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "iswsst/error.hpp"
#include "json.hpp"

namespace iswsst {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
  std::string t = trim(s);
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) return t.substr(1, t.size() - 2);
  return t;
}

std::size_t to_size(const std::string& key, const std::string& text) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ContractError(key + " expects a non-negative integer, got '" + text + "'");
  return value;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw ContractError(key + " expects a number, got '" + text + "'");
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ContractError(key + " expects true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.n_classes",   "model.size",        "model.dtype",       "model.branches",  "model.bands",
      "model.input_center", "model.input_scale",
      "lwped.levels",      "lwped.pad",         "lwped.detail_skip", "wave.blocks",     "wave.dim",
      "wave.phase",        "space.patch",       "space.dim",         "space.heads",     "space.layers",
      "fusion.mode",       "attn.reduction",    "index.indices",     "index.custom",    "indices",
      "custom",            "ablation.inverse_wave_block",            "ablation.channel_attention",
      "train.steps",       "train.batch",       "train.lr",          "train.weight_decay",
      "train.poly_power",  "train.seed",        "train.aux_weight"};
  return keys;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ContractError("config line " + std::to_string(number) + " is not 'key = value': " + t);
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ContractError("config line " + std::to_string(number) + " has an empty key");
    out.set(key, trim(t.substr(eq + 1)));
  }
  return out;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) { values_[trim(key)] = trim(value); }

const std::string& KeyValueConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ContractError("missing config key " + key);
  return it->second;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw ContractError("expected a [\"..\", ..] string list, got " + text);
  }
  if (!parsed.is_array()) throw ContractError("expected a [\"..\", ..] string list, got " + text);
  std::vector<std::string> out;
  for (const auto& item : parsed) {
    if (!item.is_string()) throw ContractError("list entries must be quoted strings: " + text);
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<IndexSpec> parse_custom_indices(const std::string& text) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') throw ContractError("expected a [..] list, got " + text);
  std::vector<IndexSpec> out;
  std::size_t pos = 1;
  while (true) {
    const auto open = t.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = t.find('}', open);
    if (close == std::string::npos) throw ContractError("unterminated '{' in custom index list: " + text);
    std::string a, b;
    std::string body = t.substr(open + 1, close - open - 1);
    std::size_t start = 0;
    while (start <= body.size()) {
      auto end = body.find(',', start);
      if (end == std::string::npos) end = body.size();
      std::string field = body.substr(start, end - start);
      const auto eq = field.find('=');
      if (eq != std::string::npos) {
        std::string name = trim(field.substr(0, eq));
        std::string value = unquote(field.substr(eq + 1));
        if (name == "a") a = value;
        else if (name == "b") b = value;
        else throw ContractError("custom index entries take fields a and b, got " + name);
      }
      start = end + 1;
    }
    if (a.empty() || b.empty()) throw ContractError("custom index entry needs both a and b: {" + body + "}");
    out.push_back(custom_index_spec(parse_band_tag(a), parse_band_tag(b)));
    pos = close + 1;
  }
  return out;
}

std::string branches_string(const ModelConfig& model) {
  std::vector<std::string> parts;
  if (model.space) parts.push_back("space");
  if (model.wave) parts.push_back("wave");
  if (!model.indices.empty()) parts.push_back("index");
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

void apply_config(const KeyValueConfig& kv, ModelConfig& m, TrainConfig& t) {
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) throw ContractError("unknown config key: " + key);
  }
  auto has = [&](const char* key) { return kv.contains(key); };
  auto text = [&](const char* key) { return unquote(kv.get(key)); };
  auto size = [&](const char* key, std::size_t& out) {
    if (has(key)) out = to_size(key, text(key));
  };
  auto real = [&](const char* key, double& out) {
    if (has(key)) out = to_double(key, text(key));
  };
  auto flag = [&](const char* key, bool& out) {
    if (has(key)) out = to_bool(key, text(key));
  };

  size("model.n_classes", m.n_classes);
  size("model.size", m.size);
  if (has("model.dtype")) {
    const std::string d = text("model.dtype");
    if (d == "f32" || d == "float32") m.dtype = DType::F32;
    else if (d == "f64" || d == "float64") m.dtype = DType::F64;
    else throw ContractError("model.dtype must be f32 or f64, got " + d);
  }
  if (has("model.bands")) m.bands = parse_band_list(text("model.bands"));
  real("model.input_center", m.input_center);
  real("model.input_scale", m.input_scale);

  const char* indices_key = has("index.indices") ? "index.indices" : (has("indices") ? "indices" : nullptr);
  const char* custom_key = has("index.custom") ? "index.custom" : (has("custom") ? "custom" : nullptr);
  if (indices_key || custom_key) {
    m.indices.clear();
    if (indices_key)
      for (const auto& name : parse_string_list(kv.get(indices_key))) m.indices.push_back(parse_index_name(name));
    if (custom_key)
      for (const auto& spec : parse_custom_indices(kv.get(custom_key))) m.indices.push_back(spec);
  }
  if (has("model.branches")) {
    m.space = m.wave = false;
    bool index = false;
    std::string list = text("model.branches");
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream in(list);
    for (std::string b; in >> b;) {
      if (b == "space") m.space = true;
      else if (b == "wave") m.wave = true;
      else if (b == "index") index = true;
      else throw ContractError("unknown branch '" + b + "' (space|wave|index)");
    }
    if (!index) m.indices.clear();
    else if (m.indices.empty()) m.indices.push_back(ndvi_spec());
  }

  size("lwped.levels", m.levels);
  if (has("lwped.pad")) {
    const std::string p = text("lwped.pad");
    if (p == "none") m.pad = PadMode::None;
    else if (p == "reflect") m.pad = PadMode::Reflect;
    else throw ContractError("lwped.pad must be none or reflect, got " + p);
  }
  if (has("lwped.detail_skip")) {
    const std::string d = text("lwped.detail_skip");
    if (d == "identity") m.detail_skip = DetailSkip::Identity;
    else if (d == "learned") m.detail_skip = DetailSkip::Learned;
    else throw ContractError("lwped.detail_skip must be identity or learned, got " + d);
  }

  size("wave.blocks", m.wave_blocks);
  size("wave.dim", m.wave_dim);
  if (has("wave.phase")) m.wave_phase = parse_phase_mode(text("wave.phase"));

  size("space.patch", m.space_encoder.patch);
  size("space.dim", m.space_encoder.dim);
  size("space.heads", m.space_encoder.heads);
  size("space.layers", m.space_encoder.layers);

  if (has("fusion.mode")) m.fusion = parse_fusion_mode(text("fusion.mode"));
  size("attn.reduction", m.reduction);
  flag("ablation.inverse_wave_block", m.inverse_wave_block);
  flag("ablation.channel_attention", m.channel_attention);

  size("train.steps", t.steps);
  size("train.batch", t.batch);
  real("train.lr", t.lr);
  real("train.weight_decay", t.weight_decay);
  real("train.poly_power", t.poly_power);
  real("train.aux_weight", t.aux_weight);
  if (has("train.seed")) t.seed = to_size("train.seed", text("train.seed"));

  if (!(t.lr > 0.0)) throw ContractError("train.lr must be positive");
  if (t.batch == 0) throw ContractError("train.batch must be positive");
  if (t.weight_decay < 0.0) throw ContractError("train.weight_decay must be non-negative");
}

KeyValueConfig to_key_values(const ModelConfig& m, const TrainConfig& t) {
  KeyValueConfig kv;
  kv.set("model.n_classes", std::to_string(m.n_classes));
  kv.set("model.size", std::to_string(m.size));
  kv.set("model.dtype", m.dtype == DType::F32 ? "f32" : "f64");
  std::string bands;
  for (std::size_t i = 0; i < m.bands.size(); ++i) bands += (i ? "," : "") + band_tag_name(m.bands[i]);
  kv.set("model.bands", bands);
  kv.set("model.input_center", format_double(m.input_center));
  kv.set("model.input_scale", format_double(m.input_scale));
  kv.set("model.branches", branches_string(m));
  std::string named = "[", custom = "[";
  for (const auto& spec : m.indices) {
    if (spec.kind == IndexKind::Generic) {
      custom += std::string(custom.size() > 1 ? ", " : "") + "{a=\"" + band_tag_name(spec.a) + "\", b=\"" +
                band_tag_name(spec.b) + "\"}";
    } else {
      named += std::string(named.size() > 1 ? ", " : "") + "\"" + spec.name() + "\"";
    }
  }
  kv.set("index.indices", named + "]");
  kv.set("index.custom", custom + "]");
  kv.set("lwped.levels", std::to_string(m.levels));
  kv.set("lwped.pad", m.pad == PadMode::None ? "none" : "reflect");
  kv.set("lwped.detail_skip", m.detail_skip == DetailSkip::Identity ? "identity" : "learned");
  kv.set("wave.blocks", std::to_string(m.wave_blocks));
  kv.set("wave.dim", std::to_string(m.wave_dim));
  kv.set("wave.phase", phase_mode_name(m.wave_phase));
  kv.set("space.patch", std::to_string(m.space_encoder.patch));
  kv.set("space.dim", std::to_string(m.space_encoder.dim));
  kv.set("space.heads", std::to_string(m.space_encoder.heads));
  kv.set("space.layers", std::to_string(m.space_encoder.layers));
  kv.set("fusion.mode", fusion_mode_name(m.fusion));
  kv.set("attn.reduction", std::to_string(m.reduction));
  kv.set("ablation.inverse_wave_block", m.inverse_wave_block ? "true" : "false");
  kv.set("ablation.channel_attention", m.channel_attention ? "true" : "false");
  kv.set("train.steps", std::to_string(t.steps));
  kv.set("train.batch", std::to_string(t.batch));
  kv.set("train.lr", format_double(t.lr));
  kv.set("train.weight_decay", format_double(t.weight_decay));
  kv.set("train.poly_power", format_double(t.poly_power));
  kv.set("train.aux_weight", format_double(t.aux_weight));
  kv.set("train.seed", std::to_string(t.seed));
  return kv;
}

}  // namespace iswsst

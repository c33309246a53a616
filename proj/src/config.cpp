#include "seqmark/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "seqmark/error.hpp"

namespace seqmark {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorCode::config_error,
              "bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " + std::string(expected) + ")");
}

std::size_t to_size(std::string_view key, std::string_view text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, text, "a non-negative integer");
  return v;
}

std::uint64_t to_u64(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, text, "a non-negative integer");
  return v;
}

double to_double(std::string_view key, std::string_view text) {
  const auto v = csv::parse_double(text);
  if (!v) bad_value(key, text, "a number");
  return *v;
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  bad_value(key, text, "on|off");
}

template <typename T, typename Parse>
std::vector<T> to_list(std::string_view key, std::string_view text, Parse parse) {
  std::vector<T> out;
  for (const auto& item : csv::split(text)) {
    if (item.empty()) bad_value(key, text, "a comma-separated list");
    out.push_back(parse(key, item));
  }
  if (out.empty()) bad_value(key, text, "a non-empty list");
  return out;
}

template <typename T, typename Format>
std::string join(const std::vector<T>& values, Format format) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : ",") + format(v);
  return out;
}

std::string size_text(std::size_t v) { return std::to_string(v); }

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SEQMARK_SIZE_FIELD(name, member) \
  {name, {[](RunConfig& c, std::string_view v) { c.member = to_size(name, v); }, \
          [](const RunConfig& c) { return size_text(c.member); }}}
#define SEQMARK_DOUBLE_FIELD(name, member) \
  {name, {[](RunConfig& c, std::string_view v) { c.member = to_double(name, v); }, \
          [](const RunConfig& c) { return format_double(c.member); }}}
#define SEQMARK_SIZE_LIST_FIELD(name, member) \
  {name, {[](RunConfig& c, std::string_view v) { c.member = to_list<std::size_t>(name, v, to_size); }, \
          [](const RunConfig& c) { return join(c.member, size_text); }}}

const std::vector<std::pair<std::string, Field>>& schema() {
  static const std::vector<std::pair<std::string, Field>> fields{
      SEQMARK_SIZE_FIELD("input_channels", net.input_channels),
      SEQMARK_SIZE_FIELD("global.depth", net.global.depth),
      SEQMARK_SIZE_LIST_FIELD("global.stage_channels", net.global.stage_channels),
      SEQMARK_SIZE_LIST_FIELD("global.kernels", net.global.kernels),
      SEQMARK_SIZE_FIELD("local.layers", net.local.layers),
      SEQMARK_SIZE_FIELD("local.channels", net.local.channels),
      SEQMARK_SIZE_FIELD("local.kernel", net.local.kernel),
      SEQMARK_SIZE_LIST_FIELD("local.dilations", net.local.dilations),
      SEQMARK_SIZE_FIELD("fusion_channels", net.fusion_channels),
      SEQMARK_DOUBLE_FIELD("dropout", net.dropout),
      {"activation", {[](RunConfig& c, std::string_view v) { c.net.hidden_activation = parse_activation(v); },
                      [](const RunConfig& c) { return std::string(activation_name(c.net.hidden_activation)); }}},
      {"mode", {[](RunConfig& c, std::string_view v) { c.net.head_input = parse_head_input(v); },
                [](const RunConfig& c) { return std::string(to_string(c.net.head_input)); }}},
      SEQMARK_DOUBLE_FIELD("learning_rate", train.adam.learning_rate),
      SEQMARK_DOUBLE_FIELD("beta1", train.adam.beta1),
      SEQMARK_DOUBLE_FIELD("beta2", train.adam.beta2),
      SEQMARK_DOUBLE_FIELD("adam_eps", train.adam.eps),
      SEQMARK_SIZE_FIELD("max_epochs", train.max_epochs),
      SEQMARK_SIZE_FIELD("patience", train.patience),
      {"seed", {[](RunConfig& c, std::string_view v) {
                  c.train.seed = to_u64("seed", v);
                  c.inference.seed = c.train.seed;
                },
                [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      SEQMARK_DOUBLE_FIELD("test_fraction", train.test_fraction),
      SEQMARK_DOUBLE_FIELD("val_fraction", train.val_fraction),
      {"smoothing", {[](RunConfig& c, std::string_view v) { c.train.smoothing = to_bool("smoothing", v); },
                     [](const RunConfig& c) { return std::string(c.train.smoothing ? "on" : "off"); }}},
      SEQMARK_DOUBLE_FIELD("sigma", train.sigma),
      SEQMARK_SIZE_FIELD("mc_passes", inference.mc_passes),
      SEQMARK_DOUBLE_FIELD("prob_threshold", inference.prob_threshold),
      SEQMARK_DOUBLE_FIELD("uncertainty_threshold_ft", inference.uncertainty_threshold_ft),
      {"tolerances", {[](RunConfig& c, std::string_view v) { c.tolerances = to_list<double>("tolerances", v, to_double); },
                      [](const RunConfig& c) { return join(c.tolerances, format_double); }}},
  };
  return fields;
}

#undef SEQMARK_SIZE_FIELD
#undef SEQMARK_DOUBLE_FIELD
#undef SEQMARK_SIZE_LIST_FIELD

const Field& field(std::string_view key) {
  for (const auto& [name, f] : schema()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::config_error, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) { field(key).set(*this, csv::trim(value)); }

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

void RunConfig::validate() const {
  net.validate();
  train.validate();
  if (inference.mc_passes < 1) throw Error(ErrorCode::config_error, "mc_passes must be at least 1");
  if (inference.prob_threshold < 0.0 || inference.uncertainty_threshold_ft < 0.0) {
    throw Error(ErrorCode::config_error, "thresholds must be non-negative");
  }
  for (double t : tolerances) {
    if (!(t >= 0.0)) throw Error(ErrorCode::config_error, "tolerances must be non-negative");
  }
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& entry : schema()) out.push_back(entry.first);
    return out;
  }();
  return keys;
}

const std::vector<std::string>& net_config_keys() {
  static const std::vector<std::string> keys{
      "input_channels", "global.depth", "global.stage_channels", "global.kernels",
      "local.layers",   "local.channels", "local.kernel",        "local.dilations",
      "fusion_channels", "dropout",     "activation",            "mode"};
  return keys;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view trimmed = csv::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::config_error, "line " + std::to_string(number) + ": expected 'key = value'");
    }
    base.set(csv::trim(trimmed.substr(0, eq)), trimmed.substr(eq + 1));
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::config_error, "override '" + a + "' is not key=value");
    config.set(csv::trim(std::string_view(a).substr(0, eq)), std::string_view(a).substr(eq + 1));
  }
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [name, f] : schema()) out += name + " = " + f.get(config) + "\n";
  return out;
}

}  // namespace seqmark

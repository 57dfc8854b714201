#include "akira/config.hpp"

#include <charconv>

#include "akira/error.hpp"
#include "akira/text.hpp"

namespace akira {

namespace {

template <typename T>
T number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw Error(ErrorKind::InvalidArgument, "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
  return value;
}

bool boolean(std::string_view key, std::string_view text) {
  const auto t = to_lower(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw Error(ErrorKind::InvalidArgument, "bad value for " + std::string(key) + ": '" + std::string(text) + "'");
}

std::chrono::milliseconds seconds(std::string_view key, std::string_view text) {
  const double s = number<double>(key, text);
  if (s <= 0) throw Error(ErrorKind::InvalidArgument, std::string(key) + " must be positive");
  return std::chrono::milliseconds(static_cast<long long>(s * 1000.0));
}

}  // namespace

void apply_setting(RunConfig& c, std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  auto& s = c.session;
  if (key == "max_transitions") s.max_transitions = number<std::size_t>(key, value);
  else if (key == "weights") {
    const auto parts = split(value, ',');
    if (parts.size() != kChannelCount)
      throw Error(ErrorKind::InvalidArgument, "weights needs " + std::to_string(kChannelCount) + " comma-separated values");
    for (std::size_t i = 0; i < kChannelCount; ++i) s.weights.w[i] = number<double>(key, trim(parts[i]));
  }
  else if (key == "smoothing_alpha") s.smoothing_alpha = number<double>(key, value);
  else if (key == "rollback_abs_threshold") s.rollback_abs_threshold = number<double>(key, value);
  else if (key == "rollback_jump_threshold") s.rollback_jump_threshold = number<double>(key, value);
  else if (key == "eval_window") s.eval_window = number<std::size_t>(key, value);
  else if (key == "eval_variance_threshold") s.eval_variance_threshold = number<double>(key, value);
  else if (key == "temperature") s.temperature = number<double>(key, value);
  else if (key == "rng_seed") s.rng_seed = number<std::uint64_t>(key, value);
  else if (key == "normalization_cap") s.normalization_cap = number<std::uint32_t>(key, value);
  else if (key == "rollback_enabled") s.rollback_enabled = boolean(key, value);
  else if (key == "rollback_to_initial") s.rollback_to_initial = boolean(key, value);
  else if (key == "variant_count") c.variant_count = number<std::size_t>(key, value);
  else if (key == "test_parallelism") c.test_parallelism = number<std::size_t>(key, value);
  else if (key == "detector_timeout_s") c.detector_timeout = seconds(key, value);
  else if (key == "runner_timeout_s") c.runner_timeout = seconds(key, value);
  else if (key == "kb_path") c.kb_path = std::string(value);
  else if (key == "channel_map") c.channel_map = std::string(value);
  else if (key == "keyword_rules") c.keyword_rules = std::string(value);
  else if (key == "prompt_dir") c.prompt_dir = std::string(value);
  else throw Error(ErrorKind::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t n = 0;
  for (auto line : split_lines(text)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::ParseError, "config line " + std::to_string(n) + ": expected key = value");
    try {
      apply_setting(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, "config line " + std::to_string(n) + ": " + e.what());
    }
  }
  try {
    base.session.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  auto c = parse_config(read_file(path), std::move(base));
  const auto dir = path.parent_path();
  for (auto* p : {&c.kb_path, &c.channel_map, &c.keyword_rules, &c.prompt_dir})
    if (!p->empty() && p->is_relative()) *p = dir / *p;
  return c;
}

}  // namespace akira

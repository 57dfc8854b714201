#include "akira/waveform.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "akira/embedded_data.hpp"
#include "akira/error.hpp"
#include "akira/text.hpp"

namespace akira {

char channel_letter(Channel c) noexcept {
  static constexpr char kLetters[] = {'U', 'G', 'I', 'L', 'C'};
  return kLetters[static_cast<std::size_t>(c)];
}

std::optional<Channel> parse_channel(char letter) noexcept {
  switch (std::toupper(static_cast<unsigned char>(letter))) {
    case 'U': return Channel::U;
    case 'G': return Channel::G;
    case 'I': return Channel::I;
    case 'L': return Channel::L;
    case 'C': return Channel::C;
    default: return std::nullopt;
  }
}

std::uint64_t SignalChannels::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

bool WeightVector::is_normalized(double tol) const noexcept {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

WeightVector WeightVector::normalized() const {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw Error(ErrorKind::InvalidWeights, "weights must be finite and non-negative");
    sum += x;
  }
  if (sum <= 0.0) throw Error(ErrorKind::InvalidWeights, "weights sum to zero");
  WeightVector out;
  for (std::size_t i = 0; i < kChannelCount; ++i) out.w[i] = w[i] / sum;
  return out;
}

// ---------------------------------------------------------------------------
// ChannelMap

ChannelMap ChannelMap::parse(std::string_view text) {
  ChannelMap map;
  int lineno = 0;
  for (auto line : split_lines(text)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = "channel map line " + std::to_string(lineno) + ": ";
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::ParseError, where + "expected 'category = channel'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, where + "empty category");
    const auto channel = value.size() == 1 ? parse_channel(value.front()) : std::nullopt;
    if (!channel)
      throw Error(ErrorKind::ParseError,
                  where + "unknown channel '" + std::string(value) + "' (expected U, G, I, L or C)");
    map.table_[std::string(key)] = *channel;
  }
  return map;
}

ChannelMap ChannelMap::load(const std::string& path) { return parse(read_file(path)); }

const ChannelMap& ChannelMap::builtin() {
  static const ChannelMap map = parse(embedded::files().at("channel_map.txt"));
  return map;
}

std::optional<Channel> ChannelMap::lookup(std::string_view category) const {
  if (auto it = table_.find(category); it != table_.end()) return it->second;
  return std::nullopt;
}

Channel ChannelMap::channel_for(std::string_view category) const {
  return lookup(category).value_or(Channel::U);
}

SignalChannels categorize(std::span<const UbFinding> findings, const ChannelMap& map) {
  SignalChannels out;
  for (const auto& f : findings) ++out[map.channel_for(f.category)];
  return out;
}

SignalChannels categorize(const DetectionReport& report, const ChannelMap& map) {
  return categorize(std::span<const UbFinding>(report.findings), map);
}

std::vector<std::string> unmapped_categories(std::span<const UbFinding> findings,
                                             const ChannelMap& map) {
  std::vector<std::string> out;
  for (const auto& f : findings)
    if (!map.lookup(f.category) && std::ranges::find(out, f.category) == out.end())
      out.push_back(f.category);
  return out;
}

// ---------------------------------------------------------------------------
// Signal math

NormalizedSignals normalize(const SignalChannels& channels, std::uint32_t cap) {
  if (cap == 0) throw Error(ErrorKind::InvalidArgument, "normalization cap must be >= 1");
  NormalizedSignals out;
  for (std::size_t i = 0; i < kChannelCount; ++i)
    out.values[i] = static_cast<double>(std::min(channels.counts[i], cap)) / cap;
  return out;
}

double smooth(std::span<const double> history, double alpha) {
  if (history.empty()) throw Error(ErrorKind::EmptyHistory, "smoothing needs at least one value");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "smoothing alpha must be in (0, 1]");
  double s = history.front();
  for (std::size_t t = 1; t < history.size(); ++t) s = alpha * history[t] + (1.0 - alpha) * s;
  return s;
}

double incorrectness(const ChannelValues& smoothed, const WeightVector& weights) {
  if (!weights.is_normalized())
    throw Error(ErrorKind::InvalidWeights, "weights must be non-negative and sum to 1");
  double e = 0.0;
  for (std::size_t i = 0; i < kChannelCount; ++i) e += weights.w[i] * smoothed[i];
  return std::clamp(e, 0.0, 1.0);  // weights sum to 1 only up to rounding
}

// ---------------------------------------------------------------------------
// Waveform

Waveform::Waveform(WaveformParams params) : params_(params) {
  if (!params_.weights.is_normalized())
    throw Error(ErrorKind::InvalidWeights, "waveform weights must sum to 1");
  if (!(params_.alpha > 0.0 && params_.alpha <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "smoothing alpha must be in (0, 1]");
  if (params_.cap == 0) throw Error(ErrorKind::InvalidArgument, "normalization cap must be >= 1");
}

const WaveformPoint& Waveform::push(const SignalChannels& raw) {
  WaveformPoint p;
  p.step = static_cast<int>(points_.size());
  p.raw = raw;
  p.normalized = normalize(raw, params_.cap);
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    const double x = p.normalized.values[i];
    p.smoothed[i] =
        points_.empty() ? x : params_.alpha * x + (1.0 - params_.alpha) * points_.back().smoothed[i];
  }
  p.e = incorrectness(p.smoothed, params_.weights);
  points_.push_back(p);
  return points_.back();
}

std::vector<double> Waveform::e_values() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.e);
  return out;
}

// ---------------------------------------------------------------------------
// Trigger rules

bool detect_rollback_point(std::span<const double> e, double abs_threshold, double jump_threshold) {
  if (e.empty()) return false;
  const double latest = e.back();
  if (latest > abs_threshold) return true;
  return e.size() >= 2 && std::abs(latest - e[e.size() - 2]) > jump_threshold;
}

bool detect_rollback_point(const Waveform& w, double abs_threshold, double jump_threshold) {
  const auto e = w.e_values();
  return detect_rollback_point(e, abs_threshold, jump_threshold);
}

bool detect_eval_point(std::span<const double> e, std::size_t window, double var_threshold) {
  if (window < 2 || e.size() < window) return false;
  const auto tail = e.last(window);
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(window);
  double var = 0.0;
  for (double x : tail) var += (x - mean) * (x - mean);
  var /= static_cast<double>(window);
  return var < var_threshold;
}

bool detect_eval_point(const Waveform& w, std::size_t window, double var_threshold) {
  const auto e = w.e_values();
  return detect_eval_point(e, window, var_threshold);
}

double hallucination_score(std::span<const double> e) {
  if (e.empty()) return 0.0;
  return *std::ranges::max_element(e) - e.front();
}

double hallucination_score(const Waveform& w) {
  const auto e = w.e_values();
  return hallucination_score(e);
}

WeightVector update_weights(std::span<const ChannelHistory, kChannelCount> history) {
  WeightVector raw;
  double sum = 0.0;
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    const double severity = std::clamp(history[i].severity, 0.0, 1.0);
    raw.w[i] = static_cast<double>(history[i].frequency) * severity;
    sum += raw.w[i];
  }
  if (sum <= 0.0) return WeightVector::uniform();
  return raw.normalized();
}

}  // namespace akira

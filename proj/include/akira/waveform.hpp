#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "akira/report.hpp"

namespace akira {

inline constexpr std::size_t kChannelCount = 5;

/// Unchecked operations, Global objects, Interoperability, Low-level control,
/// Concurrency objects.
enum class Channel : std::size_t { U = 0, G = 1, I = 2, L = 3, C = 4 };

char channel_letter(Channel c) noexcept;
std::optional<Channel> parse_channel(char letter) noexcept;

struct SignalChannels {
  std::array<std::uint32_t, kChannelCount> counts{};

  std::uint32_t& operator[](Channel c) { return counts[static_cast<std::size_t>(c)]; }
  std::uint32_t operator[](Channel c) const { return counts[static_cast<std::size_t>(c)]; }
  std::uint64_t total() const noexcept;

  bool operator==(const SignalChannels&) const = default;
};

struct NormalizedSignals {
  std::array<double, kChannelCount> values{};

  bool operator==(const NormalizedSignals&) const = default;
};

using ChannelValues = std::array<double, kChannelCount>;

/// Non-negative channel weights. Use normalized() before handing to incorrectness().
struct WeightVector {
  ChannelValues w{0.2, 0.2, 0.2, 0.2, 0.2};

  static WeightVector uniform() noexcept { return {}; }
  bool is_normalized(double tol = 1e-9) const noexcept;
  /// Rescales to sum 1; throws InvalidWeights on negative entries or zero sum.
  WeightVector normalized() const;

  bool operator==(const WeightVector&) const = default;
};

/// category label -> channel. Loaded from "category = X" lines.
class ChannelMap {
 public:
  /// Throws ParseError (with line number) on malformed lines or unknown channel letters.
  static ChannelMap parse(std::string_view text);
  static ChannelMap load(const std::string& path);
  /// The table shipped in data/channel_map.txt.
  static const ChannelMap& builtin();

  std::optional<Channel> lookup(std::string_view category) const;
  /// Unknown categories fall back to U.
  Channel channel_for(std::string_view category) const;
  const std::map<std::string, Channel, std::less<>>& entries() const noexcept { return table_; }

 private:
  std::map<std::string, Channel, std::less<>> table_;
};

SignalChannels categorize(std::span<const UbFinding> findings,
                          const ChannelMap& map = ChannelMap::builtin());
SignalChannels categorize(const DetectionReport& report,
                          const ChannelMap& map = ChannelMap::builtin());
/// Labels in findings that the map does not know (remapped to U); document order, deduplicated.
std::vector<std::string> unmapped_categories(std::span<const UbFinding> findings,
                                             const ChannelMap& map = ChannelMap::builtin());

inline constexpr std::uint32_t kDefaultNormalizationCap = 8;

/// min(count, cap) / cap per channel. cap must be >= 1.
NormalizedSignals normalize(const SignalChannels& channels, std::uint32_t cap = kDefaultNormalizationCap);

/// EMA over the whole history: s0 = x0, s_t = alpha*x_t + (1-alpha)*s_{t-1}.
/// Throws EmptyHistory on an empty series, InvalidArgument for alpha outside (0,1].
double smooth(std::span<const double> history, double alpha);

/// sum_i w_i * s_i. Rejects non-normalized weights.
double incorrectness(const ChannelValues& smoothed, const WeightVector& weights);

struct WaveformParams {
  WeightVector weights;
  double alpha = 0.5;
  std::uint32_t cap = kDefaultNormalizationCap;
};

struct WaveformPoint {
  int step = 0;
  SignalChannels raw;
  NormalizedSignals normalized;
  ChannelValues smoothed{};
  double e = 0.0;
};

/// Append-only defect-evolution series. Each push() smooths incrementally per channel.
class Waveform {
 public:
  Waveform() = default;
  explicit Waveform(WaveformParams params);

  const WaveformPoint& push(const SignalChannels& raw);

  const std::vector<WaveformPoint>& points() const noexcept { return points_; }
  std::vector<double> e_values() const;
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const WaveformPoint& back() const { return points_.back(); }
  const WaveformParams& params() const noexcept { return params_; }

 private:
  WaveformParams params_;
  std::vector<WaveformPoint> points_;
};

/// Latest E above abs_threshold, or |E(t) - E(t-1)| above jump_threshold.
bool detect_rollback_point(std::span<const double> e, double abs_threshold, double jump_threshold);
bool detect_rollback_point(const Waveform& w, double abs_threshold, double jump_threshold);

/// The last `window` values exist and their population variance is below var_threshold.
bool detect_eval_point(std::span<const double> e, std::size_t window, double var_threshold);
bool detect_eval_point(const Waveform& w, std::size_t window, double var_threshold);

/// max_t E(t) - E(0); zero for an empty or single-point series.
double hallucination_score(std::span<const double> e);
double hallucination_score(const Waveform& w);

struct ChannelHistory {
  std::uint64_t frequency = 0;
  double severity = 1.0;
};

/// w_i proportional to frequency_i * severity_i; uniform when every product is zero.
WeightVector update_weights(std::span<const ChannelHistory, kChannelCount> history);

}  // namespace akira

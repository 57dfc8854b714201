#pragma once

#include <compare>
#include <deque>
#include <map>
#include <optional>
#include <string>

#include "akira/state.hpp"

namespace akira {

struct SnapshotId {
  std::string value;

  auto operator<=>(const SnapshotId&) const = default;
};

/// One version of the program under repair plus its provenance.
struct SourceSnapshot {
  SnapshotId id;
  std::string code;
  std::string hash;  // content_hash(code)
  StateId producer = StateId::Q0;
  std::optional<ThinkingMode> mode;
  int step = 0;

  /// id is "s<step>-<hash>", unique for content+step.
  static SourceSnapshot make(std::string code, StateId producer, std::optional<ThinkingMode> mode, int step);
};

/// Append-only; references returned by get() stay valid for the store's lifetime.
class SnapshotStore {
 public:
  /// Throws DuplicateSnapshot when the id is already stored.
  SnapshotId checkpoint(SourceSnapshot snapshot);
  /// Throws UnknownSnapshot.
  const SourceSnapshot& get(const SnapshotId& id) const;
  bool contains(const SnapshotId& id) const { return index_.contains(id); }
  std::size_t size() const noexcept { return items_.size(); }
  const std::deque<SourceSnapshot>& all() const noexcept { return items_; }

 private:
  std::deque<SourceSnapshot> items_;
  std::map<SnapshotId, std::size_t> index_;
};

}  // namespace akira

#include "akira/snapshot.hpp"

#include "akira/error.hpp"
#include "akira/hash.hpp"

namespace akira {

SourceSnapshot SourceSnapshot::make(std::string code, StateId producer, std::optional<ThinkingMode> mode, int step) {
  SourceSnapshot s;
  s.hash = content_hash(code);
  s.id = SnapshotId{"s" + std::to_string(step) + "-" + s.hash};
  s.code = std::move(code);
  s.producer = producer;
  s.mode = mode;
  s.step = step;
  return s;
}

SnapshotId SnapshotStore::checkpoint(SourceSnapshot snapshot) {
  if (index_.contains(snapshot.id)) throw Error(ErrorKind::DuplicateSnapshot, "duplicate snapshot " + snapshot.id.value);
  SnapshotId id = snapshot.id;
  index_.emplace(id, items_.size());
  items_.push_back(std::move(snapshot));
  return id;
}

const SourceSnapshot& SnapshotStore::get(const SnapshotId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::UnknownSnapshot, "unknown snapshot " + id.value);
  return items_[it->second];
}

}  // namespace akira

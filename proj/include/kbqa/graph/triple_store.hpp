#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kbqa/graph/value.hpp"

namespace kbqa::graph {

/// Immutable indexed triple set. Positions in `triples()` are stable for the
/// lifetime of the snapshot.
class GraphSnapshot {
 public:
  std::size_t size() const noexcept { return triples_.size(); }
  const std::vector<Triple>& triples() const noexcept { return triples_; }
  const Triple& at(std::uint32_t pos) const { return triples_.at(pos); }

  std::span<const std::uint32_t> by_subject(const std::string& subject) const;
  std::span<const std::uint32_t> by_predicate(const std::string& predicate) const;
  std::span<const std::uint32_t> by_object(const Value& object) const;

  bool contains(const Triple& t) const { return unique_.count(t) > 0; }

  /// Every subject (as an entity value) and every object, sorted, distinct.
  std::vector<Value> nodes() const;

  /// Order-independent content digest.
  std::uint64_t content_hash() const;

 private:
  friend class TripleStore;
  bool add(Triple t);

  std::vector<Triple> triples_;
  std::set<Triple> unique_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_subject_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_predicate_;
  std::map<Value, std::vector<std::uint32_t>> by_object_;
};

using SnapshotPtr = std::shared_ptr<const GraphSnapshot>;

/// Copy-on-write store: readers grab a snapshot and never see a partially
/// applied write; writers serialize and publish a new snapshot per commit.
class TripleStore {
 public:
  TripleStore();

  SnapshotPtr snapshot() const;
  std::size_t size() const { return snapshot()->size(); }

  /// Throws InvalidTriple on an empty subject/predicate/entity object or a
  /// non-finite number. Returns false when the triple was already present.
  bool insert(Triple t);

  /// All or nothing: validates every triple first (InvalidTriple, nothing
  /// committed), then publishes one commit. Returns the number added.
  std::size_t insert_batch(std::span<const Triple> triples);

  void clear();

 private:
  static void validate(const Triple& t);

  mutable std::mutex publish_mu_;
  std::mutex writer_mu_;
  SnapshotPtr current_;
};

}  // namespace kbqa::graph

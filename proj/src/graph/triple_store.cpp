#include "kbqa/graph/triple_store.hpp"

#include <bit>
#include <cmath>

#include "kbqa/error.hpp"

namespace kbqa::graph {

namespace {

const std::vector<std::uint32_t> kNone;

std::uint64_t fnv(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::span<const std::uint32_t> GraphSnapshot::by_subject(const std::string& subject) const {
  auto it = by_subject_.find(subject);
  return it == by_subject_.end() ? std::span<const std::uint32_t>(kNone) : it->second;
}

std::span<const std::uint32_t> GraphSnapshot::by_predicate(const std::string& predicate) const {
  auto it = by_predicate_.find(predicate);
  return it == by_predicate_.end() ? std::span<const std::uint32_t>(kNone) : it->second;
}

std::span<const std::uint32_t> GraphSnapshot::by_object(const Value& object) const {
  auto it = by_object_.find(object);
  return it == by_object_.end() ? std::span<const std::uint32_t>(kNone) : it->second;
}

std::vector<Value> GraphSnapshot::nodes() const {
  std::set<Value> all;
  for (const auto& [s, _] : by_subject_) all.insert(Value::entity(s));
  for (const auto& [o, _] : by_object_) all.insert(o);
  return {all.begin(), all.end()};
}

std::uint64_t GraphSnapshot::content_hash() const {
  // unique_ is ordered, so iteration order does not depend on insertion order
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : unique_) {
    h = fnv(h, t.subject.data(), t.subject.size());
    h = fnv(h, "\x1f", 1);
    h = fnv(h, t.predicate.data(), t.predicate.size());
    h = fnv(h, "\x1f", 1);
    const auto kind = static_cast<unsigned char>(t.object.kind());
    h = fnv(h, &kind, 1);
    if (t.object.is_number()) {
      const auto bits = std::bit_cast<std::uint64_t>(t.object.as_number());
      h = fnv(h, &bits, sizeof bits);
    } else {
      h = fnv(h, t.object.text().data(), t.object.text().size());
    }
    h = fnv(h, "\x1e", 1);
  }
  return h;
}

bool GraphSnapshot::add(Triple t) {
  if (!unique_.insert(t).second) return false;
  const auto pos = static_cast<std::uint32_t>(triples_.size());
  by_subject_[t.subject].push_back(pos);
  by_predicate_[t.predicate].push_back(pos);
  by_object_[t.object].push_back(pos);
  triples_.push_back(std::move(t));
  return true;
}

TripleStore::TripleStore() : current_(std::make_shared<const GraphSnapshot>()) {}

SnapshotPtr TripleStore::snapshot() const {
  std::lock_guard lock(publish_mu_);
  return current_;
}

void TripleStore::validate(const Triple& t) {
  if (t.subject.empty()) throw Error(Errc::kInvalidTriple, "triple subject must be non-empty");
  if (t.predicate.empty()) throw Error(Errc::kInvalidTriple, "triple predicate must be non-empty");
  switch (t.object.kind()) {
    case ValueKind::kNull: throw Error(Errc::kInvalidTriple, "triple object must not be null");
    case ValueKind::kEntity:
      if (t.object.text().empty()) throw Error(Errc::kInvalidTriple, "entity object must be non-empty");
      break;
    case ValueKind::kNumber:
      if (!std::isfinite(t.object.as_number())) {
        throw Error(Errc::kInvalidTriple, "numeric object must be finite");
      }
      break;
    case ValueKind::kString: break;
  }
}

bool TripleStore::insert(Triple t) {
  validate(t);
  std::lock_guard writer(writer_mu_);
  auto current = snapshot();
  if (current->contains(t)) return false;
  auto next = std::make_shared<GraphSnapshot>(*current);
  next->add(std::move(t));
  std::lock_guard lock(publish_mu_);
  current_ = std::move(next);
  return true;
}

std::size_t TripleStore::insert_batch(std::span<const Triple> triples) {
  for (const auto& t : triples) validate(t);
  std::lock_guard writer(writer_mu_);
  auto next = std::make_shared<GraphSnapshot>(*snapshot());
  std::size_t added = 0;
  for (const auto& t : triples) added += next->add(t) ? 1 : 0;
  if (added > 0) {
    std::lock_guard lock(publish_mu_);
    current_ = std::move(next);
  }
  return added;
}

void TripleStore::clear() {
  std::lock_guard writer(writer_mu_);
  std::lock_guard lock(publish_mu_);
  current_ = std::make_shared<const GraphSnapshot>();
}

}  // namespace kbqa::graph

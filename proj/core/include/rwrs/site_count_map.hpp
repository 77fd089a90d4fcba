#pragma once

#include <cstdint>
#include <cstring>
#include <utility>
#include <vector>

#include "rwrs/lattice.hpp"

namespace rwrs {

// Open-addressing hash map from packed lattice sites to visit counts.
// Linear probing, power-of-two capacity, grown at 60% load. Transient walks
// visit Theta(n) distinct sites, so the flat layout (24 bytes/slot) matters
// both for memory and for probe locality.
//
// The empty-slot sentinel is the all-ones key: it would decode to every
// coordinate simultaneously at its extreme packable value, which no walk of
// bounded horizon can reach.
class SiteCountMap {
 public:
  SiteCountMap() { rehash(kMinCapacity); }
  explicit SiteCountMap(std::size_t expected_entries) {
    std::size_t cap = kMinCapacity;
    while (cap * 5 < expected_entries * 8) cap <<= 1;
    rehash(cap);
  }

  // Returns the new count for `key`.
  std::int64_t add(PackedSite key, std::int64_t delta = 1) {
    Slot& s = find_slot(key);
    if (s.key == kEmpty) {
      s.key = key;
      s.count = 0;
      ++size_;
      if (size_ * 5 > capacity_ * 3) {
        grow();
        return add_rehashed(key, delta);
      }
    }
    s.count += delta;
    total_ += delta;
    return s.count;
  }

  std::int64_t add_and_count(PackedSite key) { return add(key, 1); }

  std::int64_t count(PackedSite key) const {
    const Slot& s = const_cast<SiteCountMap*>(this)->find_slot(key);
    return s.key == kEmpty ? 0 : s.count;
  }

  std::size_t distinct() const { return size_; }
  std::int64_t total() const { return total_; }

  template <class F>
  void for_each(F&& fn) const {
    for (const Slot& s : slots_) {
      if (s.key != kEmpty) fn(s.key, s.count);
    }
  }

  void clear() {
    for (Slot& s : slots_) s.key = kEmpty;
    size_ = 0;
    total_ = 0;
  }

 private:
  struct Slot {
    PackedSite key;
    std::int64_t count;
  };

  static constexpr PackedSite kEmpty = ~PackedSite(0);
  static constexpr std::size_t kMinCapacity = 16;

  Slot& find_slot(PackedSite key) {
    std::size_t i = hash_packed(key) & (capacity_ - 1);
    while (slots_[i].key != kEmpty && slots_[i].key != key) {
      i = (i + 1) & (capacity_ - 1);
    }
    return slots_[i];
  }

  std::int64_t add_rehashed(PackedSite key, std::int64_t delta) {
    Slot& s = find_slot(key);
    if (s.key == kEmpty) {
      s.key = key;
      s.count = 0;
      ++size_;
    }
    s.count += delta;
    total_ += delta;
    return s.count;
  }

  void rehash(std::size_t new_capacity) {
    capacity_ = new_capacity;
    slots_.assign(capacity_, Slot{kEmpty, 0});
  }

  void grow() {
    std::vector<Slot> old = std::move(slots_);
    rehash(capacity_ * 2);
    size_ = 0;
    for (const Slot& s : old) {
      if (s.key != kEmpty) {
        Slot& dst = find_slot(s.key);
        dst.key = s.key;
        dst.count = s.count;
        ++size_;
      }
    }
  }

  std::vector<Slot> slots_;
  std::size_t capacity_ = 0;
  std::size_t size_ = 0;
  std::int64_t total_ = 0;
};

}  // namespace rwrs

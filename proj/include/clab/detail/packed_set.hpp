#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "clab/error.hpp"

namespace clab::detail {

// Insert-only set of fixed-width word strings with dense ids. Strings live in
// fixed-size chunks so pointers stay valid while the set grows; the index is
// open addressing with linear probing.
template <class Word>
class PackedSet {
 public:
  static constexpr std::size_t kChunk = std::size_t{1} << 16;

  explicit PackedSet(std::size_t words) : words_(words) { rehash(std::size_t{1} << 10); }

  std::size_t words() const { return words_; }
  std::size_t size() const { return count_; }
  const Word* get(std::size_t id) const { return chunks_[id / kChunk].get() + (id % kChunk) * words_; }

  std::optional<std::uint32_t> find(const Word* x) const {
    std::uint64_t pos = hash(x) & mask_;
    while (slots_[pos] != 0) {
      const std::uint32_t id = slots_[pos] - 1;
      if (std::memcmp(get(id), x, words_ * sizeof(Word)) == 0) return id;
      pos = (pos + 1) & mask_;
    }
    return std::nullopt;
  }

  // (id, inserted)
  std::pair<std::uint32_t, bool> insert(const Word* x) {
    std::uint64_t pos = hash(x) & mask_;
    while (slots_[pos] != 0) {
      const std::uint32_t id = slots_[pos] - 1;
      if (std::memcmp(get(id), x, words_ * sizeof(Word)) == 0) return {id, false};
      pos = (pos + 1) & mask_;
    }
    if (count_ >= 0xfffffffeULL) fail(ErrorKind::kBudgetExceeded, "id space exhausted");
    const auto id = static_cast<std::uint32_t>(count_);
    if (id % kChunk == 0) chunks_.emplace_back(new Word[kChunk * words_]);
    std::memcpy(chunks_.back().get() + (id % kChunk) * words_, x, words_ * sizeof(Word));
    slots_[pos] = id + 1;
    ++count_;
    if (count_ * 2 > slots_.size()) rehash(slots_.size() * 2);
    return {id, true};
  }

 private:
  static std::uint64_t mix(std::uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
  }

  std::uint64_t hash(const Word* x) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::size_t i = 0; i < words_; ++i)
      h = mix(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x[i])) + (static_cast<std::uint64_t>(i) << 32)));
    return h;
  }

  void rehash(std::size_t n_slots) {
    slots_.assign(n_slots, 0);
    mask_ = n_slots - 1;
    for (std::size_t id = 0; id < count_; ++id) {
      std::uint64_t pos = hash(get(id)) & mask_;
      while (slots_[pos] != 0) pos = (pos + 1) & mask_;
      slots_[pos] = static_cast<std::uint32_t>(id + 1);
    }
  }

  std::size_t words_;
  std::size_t count_ = 0;
  std::vector<std::unique_ptr<Word[]>> chunks_;
  std::vector<std::uint32_t> slots_;  // id + 1; 0 is empty
  std::uint64_t mask_ = 0;
};

}  // namespace clab::detail

#pragma once
#include <cstdint>
#include <limits>
#include <vector>

#include "optit/util/require.hpp"
#include "optit/util/rng.hpp"

namespace optit::learn {

enum class Boundary : std::uint8_t { none, terminal_next, timeout_next };

struct BufferEntry {
  std::vector<float> obs;
  std::vector<double> pi_tilde;  // search policy over actions, sums to 1
  double v_tilde = 0;
  std::int64_t episode_id = 0;
  std::int32_t step_index = 0;
  Boundary boundary = Boundary::none;
  std::uint32_t next = kNoSlot;  // ring slot of the episode's next entry

  static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();
};

// FIFO ring over search-annotated steps. Successive entries of one episode are
// chained through `next`; overwritten slots invalidate stale links because the
// (episode_id, step_index) continuity check fails.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "ReplayBuffer: capacity must be positive");
    ring_.reserve(std::min<std::size_t>(capacity, 1 << 20));
  }

  std::size_t size() const { return ring_.size(); }
  std::size_t capacity() const { return capacity_; }
  const BufferEntry& at(std::uint32_t slot) const { return ring_[slot]; }

  std::uint32_t append(BufferEntry e) {
    e.next = BufferEntry::kNoSlot;
    if (ring_.size() < capacity_) {
      ring_.push_back(std::move(e));
      return static_cast<std::uint32_t>(ring_.size() - 1);
    }
    std::uint32_t slot = write_;
    ring_[slot] = std::move(e);
    write_ = (write_ + 1) % capacity_;
    return slot;
  }

  void link(std::uint32_t prev, std::uint32_t next) {
    if (prev != BufferEntry::kNoSlot) ring_[prev].next = next;
  }

  void set_boundary(std::uint32_t slot, Boundary b) { ring_[slot].boundary = b; }

  std::uint32_t sample_slot(Rng& rng) const {
    require(!ring_.empty(), "ReplayBuffer: empty");
    return rng.below(static_cast<std::uint32_t>(ring_.size()));
  }

  // Up to max_len consecutive slots of one episode starting from a uniform
  // slot; truncated at terminal/timeout boundaries and never crossing episode
  // ends or overwritten regions.
  std::vector<std::uint32_t> sample_segment(int max_len, Rng& rng) const {
    std::vector<std::uint32_t> slots;
    std::uint32_t cur = sample_slot(rng);
    for (int i = 0; i < max_len; ++i) {
      const BufferEntry& e = ring_[cur];
      slots.push_back(cur);
      if (e.boundary != Boundary::none) break;
      std::uint32_t nxt = e.next;
      if (nxt == BufferEntry::kNoSlot || nxt >= ring_.size()) break;
      const BufferEntry& ne = ring_[nxt];
      if (ne.episode_id != e.episode_id || ne.step_index != e.step_index + 1) break;
      cur = nxt;
    }
    return slots;
  }

 private:
  std::size_t capacity_;
  std::vector<BufferEntry> ring_;
  std::uint32_t write_ = 0;
};

}  // namespace optit::learn

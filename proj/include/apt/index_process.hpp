#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace apt {

/// Tracks which machine (replica) sits at each annealing level, its direction
/// of travel, and completed round trips.
///
/// Machine m starts at level m. Each iteration every machine looks at the pair
/// between its level and the neighbour in its direction: if that swap was
/// accepted it moves, otherwise its direction flips. A round trip is counted
/// when a machine that has reached (N, +1) after leaving (0, -1) returns to
/// (0, -1).
class IndexProcess {
 public:
  /// Parity of the first proposed iteration. Directions start at -1 for
  /// machines whose index has that parity so that every machine initially
  /// points at a pair proposed at the first iteration.
  explicit IndexProcess(std::size_t pairs, int first_parity = 1);

  std::size_t pairs() const { return level_.size() - 1; }

  /// Applies iteration t. `accepted[n]` (size N+1, entry 0 unused) marks the
  /// accepted swaps; only pairs with n = t (mod 2) may be set. Returns the
  /// number of round trips completed during this update.
  std::size_t update(std::size_t t, std::span<const std::uint8_t> accepted);

  /// Level I^m of machine m.
  const std::vector<std::size_t>& levels() const { return level_; }
  /// Direction of machine m, in {-1, +1}.
  const std::vector<int>& directions() const { return dir_; }
  std::size_t machine_at(std::size_t level) const { return machine_[level]; }

  std::uint64_t round_trips() const { return total_; }
  const std::vector<std::uint64_t>& round_trips_per_machine() const { return trips_; }

  bool is_permutation() const;

 private:
  enum Phase : std::uint8_t { kUnstarted, kSeekTarget, kSeekReference };

  std::vector<std::size_t> level_;
  std::vector<int> dir_;
  std::vector<std::size_t> machine_;
  std::vector<Phase> phase_;
  std::vector<std::uint64_t> trips_;
  std::uint64_t total_ = 0;
};

}  // namespace apt

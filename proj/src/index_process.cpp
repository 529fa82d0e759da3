#include "apt/index_process.hpp"

#include <stdexcept>
#include <string>

namespace apt {

IndexProcess::IndexProcess(std::size_t pairs, int first_parity)
    : level_(pairs + 1),
      dir_(pairs + 1),
      machine_(pairs + 1),
      phase_(pairs + 1, kUnstarted),
      trips_(pairs + 1, 0) {
  const std::size_t p = static_cast<std::size_t>(first_parity & 1);
  for (std::size_t m = 0; m <= pairs; ++m) {
    level_[m] = m;
    machine_[m] = m;
    dir_[m] = (m % 2 == p) ? -1 : +1;
  }
}

std::size_t IndexProcess::update(std::size_t t, std::span<const std::uint8_t> accepted) {
  const std::size_t N = pairs();
  if (accepted.size() != N + 1) throw std::invalid_argument("accepted must have N + 1 entries");
  for (std::size_t n = 1; n <= N; ++n) {
    if (accepted[n] && n % 2 != t % 2)
      throw std::invalid_argument("accepted pair " + std::to_string(n) +
                                  " does not match the parity of iteration " + std::to_string(t));
  }

  std::size_t completed = 0;
  for (std::size_t m = 0; m <= N; ++m) {
    const std::size_t i = level_[m];
    const int e = dir_[m];
    // pair joining level i and level i + e
    const std::size_t n = e > 0 ? i + 1 : i;
    const bool exists = e > 0 ? i < N : i > 0;
    if (exists && accepted[n]) {
      level_[m] = e > 0 ? i + 1 : i - 1;
    } else {
      dir_[m] = -e;
    }

    if (level_[m] == 0 && dir_[m] < 0) {
      if (phase_[m] == kSeekReference) {
        ++trips_[m];
        ++total_;
        ++completed;
      }
      if (phase_[m] != kSeekTarget) phase_[m] = kSeekTarget;
    } else if (level_[m] == N && dir_[m] > 0 && phase_[m] == kSeekTarget) {
      phase_[m] = kSeekReference;
    }
  }

  for (std::size_t m = 0; m <= N; ++m) machine_[level_[m]] = m;
  if (!is_permutation()) throw std::logic_error("index process left the permutation group");
  return completed;
}

bool IndexProcess::is_permutation() const {
  std::vector<char> seen(level_.size(), 0);
  for (std::size_t l : level_) {
    if (l >= seen.size() || seen[l]) return false;
    seen[l] = 1;
  }
  return true;
}

}  // namespace apt

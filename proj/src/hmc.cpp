#include "mrp/hmc.hpp"

namespace mrp {

std::vector<int> metric_window_ends(int warmup) {
  int init_buffer = 75, term_buffer = 50, base_window = 25;
  if (warmup < 20) return {};
  if (warmup < init_buffer + term_buffer + base_window) {
    init_buffer = static_cast<int>(0.15 * warmup);
    term_buffer = static_cast<int>(0.1 * warmup);
    base_window = warmup - init_buffer - term_buffer;
  }
  std::vector<int> ends;
  const int last = warmup - term_buffer;  // slow phase covers [init_buffer, last)
  int start = init_buffer;
  int size = base_window;
  while (start < last) {
    int end = start + size;
    // Stretch the final window when the next one would not fit.
    if (end + 2 * size > last) end = last;
    ends.push_back(end - 1);
    start = end;
    size *= 2;
  }
  return ends;
}

std::mt19937_64 make_rng(std::uint64_t seed, int chain_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain_id), 0x6d7270u};
  return std::mt19937_64(seq);
}

}  // namespace mrp

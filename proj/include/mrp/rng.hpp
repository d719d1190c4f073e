#ifndef MRP_RNG_HPP
#define MRP_RNG_HPP

#include <cstdint>
#include <random>

namespace mrp {

/// Independent generator for (seed, stream); chains and simulation stages
/// each take their own stream.
std::mt19937_64 make_rng(std::uint64_t seed, int stream);

}  // namespace mrp

#endif  // MRP_RNG_HPP

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace drpl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Deterministic child seed from a base seed and a path of integer tags,
/// e.g. derive_seed(seed, {fold, role}). Order of tags matters.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

}  // namespace drpl

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace fednb {

// mt19937_64 output is fixed by the standard; distributions come from
// Boost.Random so that sampled values are identical across toolchains.
using Rng = std::mt19937_64;

// Derives an independent 64-bit seed from a master seed and a list of tags.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

double uniform01(Rng& rng);  // open interval (0, 1)
double standard_normal(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);  // [0, n)

// Fisher-Yates with a portable index distribution.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

// Dirichlet(concentration * 1_k) by inverse-CDF gamma sampling. Draws made
// from the same generator state at different concentrations are coupled:
// the same uniforms feed every level.
std::vector<double> dirichlet_symmetric(Rng& rng, std::size_t k, double concentration);

}  // namespace fednb

#include "fednb/rng.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <cmath>

namespace fednb {

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(master));
  words.push_back(static_cast<std::uint32_t>(master >> 32));
  for (auto t : tags) {
    words.push_back(static_cast<std::uint32_t>(t));
    words.push_back(static_cast<std::uint32_t>(t >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  double u = 0.0;
  do {
    u = dist(rng);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

std::vector<double> dirichlet_symmetric(Rng& rng, std::size_t k, double concentration) {
  std::vector<double> u(k);
  for (auto& x : u) x = uniform01(rng);
  std::vector<double> g(k);
  for (std::size_t i = 0; i < k; ++i) {
    g[i] = boost::math::gamma_p_inv(concentration, u[i]);
  }
  double total = 0.0;
  for (double x : g) total += x;
  if (!(total > 0.0) || !std::isfinite(total)) {
    // every quantile underflowed: the largest uniform takes the whole mass
    std::vector<double> p(k, 0.0);
    p[static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin())] = 1.0;
    return p;
  }
  for (auto& x : g) x /= total;
  return g;
}

}  // namespace fednb

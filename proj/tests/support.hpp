#pragma once

#include "grinlens/scenario.hpp"

#include <random>

namespace grinlens::test {

/// Coarse lens: 30 cells, about 1200 elements at 10 kHz.
inline DomainSpec small_domain() { return {0.01, 0.02, 0.045, 0.09, 0.008, 0.1485 / 6}; }

inline ControlState random_control(int n, std::mt19937& rng, double amp = 0.3) {
  std::uniform_real_distribution<double> u(-amp, amp);
  ControlState c = ControlState::zeros(n);
  for (auto& x : c.v) x = u(rng);
  for (auto& x : c.u) x = u(rng);
  return c;
}

inline ControlState symmetrize(const ControlState& c, const std::vector<int>& mirror) {
  ControlState s = c;
  for (int j = 0; j < c.size(); ++j) {
    s.v[j] = 0.5 * (c.v[j] + c.v[mirror[j]]);
    s.u[j] = 0.5 * (c.u[j] + c.u[mirror[j]]);
  }
  return s;
}

inline std::vector<double> random_direction(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  std::vector<double> d(n);
  for (auto& x : d) x = g(rng);
  return d;
}

}  // namespace grinlens::test

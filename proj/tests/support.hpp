#pragma once

// Random fixtures for property tests. Uses the standard library engine so the
// fixtures do not depend on the generator under test.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "aipw/models.hpp"

namespace support {

struct Problem {
  std::vector<double> t, ty, pi, m;
};

// Random plug-in inputs with propensities in [lo, 1).
inline Problem random_problem(std::size_t n, std::uint64_t seed, double lo = 0.05) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Problem p;
  p.t.resize(n);
  p.ty.resize(n);
  p.pi.resize(n);
  p.m.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.pi[i] = lo + (1.0 - lo) * unit(g) * 0.999;
    p.t[i] = unit(g) < p.pi[i] ? 1.0 : 0.0;
    p.m[i] = 5.0 + 3.0 * normal(g);
    p.ty[i] = p.t[i] * (p.m[i] + normal(g));
  }
  p.t[0] = 1.0;
  p.ty[0] = p.m[0] + 0.5;
  p.t[1] = 0.0;
  p.ty[1] = 0.0;
  return p;
}

// Dataset with covariates "x1", "x2" driving both missingness and outcome.
inline aipw::Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> t(n), y(n), x1(n), x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = normal(g);
    x2[i] = normal(g);
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * x1[i] - 0.5 * x2[i])));
    t[i] = unit(g) < p ? 1.0 : 0.0;
    y[i] = t[i] == 1.0 ? 2.0 + 1.5 * x1[i] + x2[i] + 0.5 * x1[i] * x1[i] + normal(g) : NAN;
  }
  return aipw::Dataset(std::move(t), std::move(y), {{"x1", std::move(x1)}, {"x2", std::move(x2)}});
}

// The four-row fixture shared with tests/oracles/d4_oracle.py.
struct D4 {
  std::vector<double> t{1, 1, 1, 0};
  std::vector<double> y{2, 4, 6, NAN};
  std::vector<double> ty{2, 4, 6, 0};
  std::vector<double> pi{0.5, 0.8, 0.4, 0.25};
  std::vector<double> m{3, 3, 5, 7};
};

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace support

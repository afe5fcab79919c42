#pragma once

// Seeded generators for property suites. The engine is std::mt19937_64 and
// every variate is derived from its raw 64-bit output by the fixed mappings
// below, so sequences are reproducible across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "qmt/measure.hpp"

namespace qmt {

using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Box-Muller; one variate per call.
inline double normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

inline Complex complex_normal(Rng& rng) { return {normal(rng), normal(rng)}; }

inline Eigen::Vector3d random_unit_vector(Rng& rng) {
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// Weights drawn from a flat Dirichlet; with probability 1/4 a random subset
// of atoms is zeroed so that vertices and faces of the simplex get visited.
inline std::vector<double> random_probability_vector(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  const bool sparse = uniform01(rng) < 0.25;
  double total = 0.0;
  for (auto& v : w) {
    v = -std::log(1.0 - uniform01(rng));
    if (sparse && uniform01(rng) < 0.6) v = 0.0;
    total += v;
  }
  if (total == 0.0) {
    w[uniform_index(rng, n)] = 1.0;
    return w;
  }
  for (auto& v : w) v /= total;
  return w;
}

inline ClassicalMeasure random_classical_measure(Rng& rng, const SpacePtr& space) {
  return ClassicalMeasure(space, random_probability_vector(rng, space->size()));
}

inline Eigen::MatrixXcd random_complex_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = complex_normal(rng);
  return m;
}

// Density matrix of random rank in [1, d].
inline Eigen::MatrixXcd random_density(Rng& rng, Eigen::Index d) {
  const Eigen::Index rank = 1 + static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(d)));
  const Eigen::MatrixXcd g = random_complex_matrix(rng, d, rank);
  Eigen::MatrixXcd rho = g * g.adjoint();
  rho /= rho.trace().real();
  return (rho + rho.adjoint()) * 0.5;
}

// B B^dagger scaled so that the entries sum to 1: strongly positive.
inline DecoherenceFunctional random_psd_df(Rng& rng, const SpacePtr& space, Eigen::Index rank) {
  const auto n = static_cast<Eigen::Index>(space->size());
  const Eigen::MatrixXcd b = random_complex_matrix(rng, n, rank);
  Eigen::MatrixXcd d = b * b.adjoint();
  d /= d.sum().real();
  d = (d + d.adjoint()) * 0.5;
  return DecoherenceFunctional(space, std::move(d));
}

}  // namespace qmt

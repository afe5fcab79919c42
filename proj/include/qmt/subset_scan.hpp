#pragma once

// Exhaustive evaluation of mu(X) = sum_{x,y in X} Re D(x;y) over every
// nonempty subset X, visiting subsets in Gray-code order so each step
// toggles one atom and costs O(n).

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qmt/error.hpp"

namespace qmt {

inline constexpr std::size_t kMaxScanAtoms = 24;

struct SubsetScan {
  double minimum = std::numeric_limits<double>::infinity();
  std::uint64_t minimizer = 0;  // least mask attaining `minimum`
  std::optional<std::uint64_t> first_violation;  // least mask with mu < -violation_tol
  double first_violation_value = 0.0;
  std::uint64_t violations = 0;
  std::uint64_t zero_count = 0;  // subsets with |mu| <= zero_tol
  std::uint64_t subsets = 0;
};

struct ScanOptions {
  double violation_tolerance = 1e-10;
  double zero_tolerance = 1e-10;
  unsigned threads = 0;  // 0: QMT_THREADS or hardware concurrency
};

// Worker count for subset scans, capped by the QMT_THREADS variable.
inline unsigned scan_threads(unsigned requested = 0) {
  unsigned n = requested;
  if (n == 0) {
    n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QMT_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
  }
  return std::max(1U, n);
}

namespace detail {

inline constexpr unsigned kChunkBits = 12;

inline void merge_scan(SubsetScan& into, const SubsetScan& part) {
  if (part.minimum < into.minimum || (part.minimum == into.minimum && part.minimizer < into.minimizer)) {
    into.minimum = part.minimum;
    into.minimizer = part.minimizer;
  }
  if (part.first_violation &&
      (!into.first_violation || *part.first_violation < *into.first_violation)) {
    into.first_violation = part.first_violation;
    into.first_violation_value = part.first_violation_value;
  }
  into.violations += part.violations;
  into.zero_count += part.zero_count;
  into.subsets += part.subsets;
}

// Scans Gray-code positions [lo, hi). The running state is rebuilt exactly
// at `lo`, so every subset value is independent of how the range is split.
inline SubsetScan scan_range(const Eigen::MatrixXd& d, std::uint64_t lo, std::uint64_t hi,
                             const ScanOptions& opts) {
  const auto n = static_cast<std::size_t>(d.rows());
  SubsetScan out;
  std::vector<double> row(n, 0.0);  // row[t] = sum_{y in S} d(t, y)
  std::uint64_t mask = lo ^ (lo >> 1);
  double value = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    if (!((mask >> y) & 1U)) continue;
    for (std::size_t t = 0; t < n; ++t) row[t] += d(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(y));
  }
  for (std::size_t x = 0; x < n; ++x)
    if ((mask >> x) & 1U) value += row[x];

  auto visit = [&](std::uint64_t m, double v) {
    if (m == 0) return;
    ++out.subsets;
    if (v < out.minimum || (v == out.minimum && m < out.minimizer)) {
      out.minimum = v;
      out.minimizer = m;
    }
    if (v < -opts.violation_tolerance) {
      ++out.violations;
      if (!out.first_violation || m < *out.first_violation) {
        out.first_violation = m;
        out.first_violation_value = v;
      }
    }
    if (std::abs(v) <= opts.zero_tolerance) ++out.zero_count;
  };

  visit(mask, value);
  for (std::uint64_t i = lo + 1; i < hi; ++i) {
    const auto t = static_cast<std::size_t>(std::countr_zero(i));
    const std::uint64_t bit = std::uint64_t{1} << t;
    const auto ti = static_cast<Eigen::Index>(t);
    if (mask & bit) {
      // Removing t: mu(S - t) = mu(S) - 2 row_t + d_tt.
      value += d(ti, ti) - 2.0 * row[t];
      mask &= ~bit;
      for (std::size_t u = 0; u < n; ++u) row[u] -= d(static_cast<Eigen::Index>(u), ti);
    } else {
      value += d(ti, ti) + 2.0 * row[t];
      mask |= bit;
      for (std::size_t u = 0; u < n; ++u) row[u] += d(static_cast<Eigen::Index>(u), ti);
    }
    visit(mask, value);
  }
  return out;
}

}  // namespace detail

// `d` must be real symmetric (the real part of a decoherence matrix).
inline SubsetScan scan_subsets(const Eigen::MatrixXd& d, const ScanOptions& opts = {}) {
  const auto n = static_cast<std::size_t>(d.rows());
  if (d.cols() != d.rows()) throw InvalidArgument("scan_subsets: matrix must be square");
  if (n > kMaxScanAtoms) throw SpaceTooLarge("subset scan supports at most 24 atoms");
  const std::uint64_t total = std::uint64_t{1} << n;
  const std::uint64_t chunk = std::uint64_t{1} << std::min<std::size_t>(detail::kChunkBits, n);
  const std::uint64_t chunks = total / chunk;
  std::vector<SubsetScan> parts(chunks);
  const unsigned workers = std::min<unsigned>(scan_threads(opts.threads), static_cast<unsigned>(chunks));

  auto work = [&](unsigned w) {
    for (std::uint64_t c = w; c < chunks; c += workers) parts[c] = detail::scan_range(d, c * chunk, (c + 1) * chunk, opts);
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  SubsetScan out;
  for (const auto& p : parts) detail::merge_scan(out, p);
  return out;
}

// Direct O(|X|^2) evaluation of mu for a single mask.
inline double subset_measure(const Eigen::MatrixXd& d, std::uint64_t mask) {
  double v = 0.0;
  const auto n = d.rows();
  for (Eigen::Index x = 0; x < n; ++x) {
    if (!((mask >> x) & 1U)) continue;
    for (Eigen::Index y = 0; y < n; ++y)
      if ((mask >> y) & 1U) v += d(x, y);
  }
  return v;
}

}  // namespace qmt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ranslice/errors.hpp"

namespace ranslice {

/// Trailing moving average. The first window-1 points average the whole
/// available prefix.
inline std::vector<double> smooth(std::span<const double> series, std::size_t window) {
  if (window < 1) throw UsageError("smoothing window must be >= 1");
  std::vector<double> out(series.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    acc += series[i];
    if (i >= window) acc -= series[i - window];
    const std::size_t n = std::min(i + 1, window);
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Value `fraction` of the way toward a reference level, measured so that
/// it works for negative rewards too: ref - (1 - fraction) * |ref|.
inline double relative_level(double ref, double fraction) {
  return ref - (1.0 - fraction) * std::abs(ref);
}

/// Mean raw reward over the last quarter of the run (at least one step).
inline double final_quartile_mean(std::span<const double> rewards) {
  if (rewards.empty()) return 0.0;
  const std::size_t n = std::max<std::size_t>(1, rewards.size() / 4);
  return mean(rewards.subspan(rewards.size() - n));
}

/// Index of the first smoothed point backed by a full window. Prefix points
/// average only a handful of rewards and are too noisy to test against a
/// level. Series shorter than the window use every point.
inline std::size_t first_full_window(std::size_t n, std::size_t window) {
  return n >= window ? window - 1 : 0;
}

/// First step whose smoothed reward reaches 95% of the final-quartile mean;
/// -1 when it never does.
inline std::int64_t convergence_step(std::span<const double> rewards,
                                     std::size_t window, double fraction = 0.95) {
  const auto s = smooth(rewards, window);
  const double target = relative_level(final_quartile_mean(rewards), fraction);
  for (std::size_t i = first_full_window(s.size(), window); i < s.size(); ++i)
    if (s[i] >= target) return static_cast<std::int64_t>(i);
  return -1;
}

/// Number of times the smoothed reward falls more than `depth` (relative)
/// below its running maximum. Each excursion counts once.
inline int drop_count(std::span<const double> rewards, std::size_t window,
                      double depth = 0.20) {
  const auto s = smooth(rewards, window);
  int drops = 0;
  bool in_drop = false;
  double peak = -INFINITY;
  for (std::size_t i = first_full_window(s.size(), window); i < s.size(); ++i) {
    const double x = s[i];
    peak = std::max(peak, x);
    const bool below = x < relative_level(peak, 1.0 - depth);
    if (below && !in_drop) ++drops;
    in_drop = below;
  }
  return drops;
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `trials` fair coin flips. Ties are excluded by the caller.
inline double sign_test_p(int wins, int trials) {
  if (trials <= 0) return 1.0;
  double p = 0.0;
  double c = 1.0;  // C(trials, i)
  for (int i = 0; i <= trials; ++i) {
    if (i >= wins) p += c;
    c = c * (trials - i) / (i + 1);
  }
  return p / std::pow(2.0, trials);
}

}  // namespace ranslice

// Reference implementations used as test oracles. Written for clarity, not
// speed: each quantity is recomputed from scratch from the raw events.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "engage/calibration.hpp"
#include "engage/core.hpp"

namespace oracle {

using namespace engage;

struct BatchResult {
  std::vector<std::uint64_t> window_index;
  std::vector<std::optional<double>> psi;
  std::vector<std::optional<double>> a_star;
  std::vector<std::optional<double>> a_smooth;
  double lambda_star = 0.0;
};

/// Whole-session evaluation over every window between the first and last
/// event (empty ones included). Ã is expanded in closed form rather than by
/// the running recurrence.
inline std::optional<BatchResult> evaluate(const std::vector<DetectionEvent>& events,
                                           const EngineParams& p) {
  if (events.empty()) return std::nullopt;
  std::map<std::uint64_t, std::vector<const DetectionEvent*>> windows;
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto& e : events) {
    const std::uint64_t w = e.timestamp_ms / p.window_ms;
    lo = std::min(lo, w);
    hi = std::max(hi, w);
    if (e.confidence > p.theta) windows[w].push_back(&e);
  }
  BatchResult r;
  std::vector<double> psis;      // all non-empty psi so far
  std::vector<double> a_stars;   // per scored window
  for (std::uint64_t w = lo; w <= hi; ++w) {
    r.window_index.push_back(w);
    const auto it = windows.find(w);
    if (it == windows.end() || it->second.empty()) {
      r.psi.push_back(std::nullopt);
      r.a_star.push_back(std::nullopt);
      r.a_smooth.push_back(a_stars.empty() ? std::nullopt : r.a_smooth.back());
      continue;
    }
    const auto& dets = it->second;
    double psi = p.eta;
    for (std::size_t q = 0; q < kEmotionCount; ++q) {
      double num = 0.0;
      for (const auto* d : dets) {
        if (slot(d->label) == q) num += d->confidence;
      }
      psi += p.beta[q] * (num / static_cast<double>(dets.size()));
    }
    psis.push_back(psi);
    const std::size_t n = std::min(psis.size(), p.variance_window);
    double mean = 0.0;
    for (std::size_t i = psis.size() - n; i < psis.size(); ++i) mean += psis[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = psis.size() - n; i < psis.size(); ++i) {
      var += (psis[i] - mean) * (psis[i] - mean);
    }
    var /= static_cast<double>(n);
    const double a = psi - p.lambda_reg * var;
    a_stars.push_back(a);

    const std::size_t k = a_stars.size();
    double smooth = std::pow(p.alpha, static_cast<double>(k - 1)) * a_stars[0];
    for (std::size_t j = 1; j < k; ++j) {
      smooth += (1.0 - p.alpha) * std::pow(p.alpha, static_cast<double>(k - 1 - j)) * a_stars[j];
    }
    r.psi.push_back(psi);
    r.a_star.push_back(a);
    r.a_smooth.push_back(smooth);
  }
  if (a_stars.empty()) return std::nullopt;
  double num = 0.0, den = 0.0;
  std::size_t tau = 0;
  for (const auto& s : r.a_smooth) {
    if (!s) continue;
    const double wgt = 1.0 + p.delta * static_cast<double>(tau++);
    num += wgt * *s;
    den += wgt;
  }
  r.lambda_star = std::clamp(num / den, 0.0, 1.0);
  return r;
}

/// O(n^3) over every candidate split triple, midpoints between adjacent
/// distinct scores plus the two outer sentinels. Ties keep the first triple
/// found in lexicographic (t1, t2, t3) order.
inline calibration::ThresholdFit brute_force_thresholds(
    const std::vector<calibration::ScoredTruth>& data) {
  std::vector<double> scores;
  for (const auto& d : data) scores.push_back(d.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> cuts;
  for (std::size_t i = 0; i + 1 < scores.size(); ++i) cuts.push_back((scores[i] + scores[i + 1]) / 2);
  calibration::ThresholdFit best{{}, -1.0};
  for (std::size_t a = 0; a < cuts.size(); ++a) {
    for (std::size_t b = a + 1; b < cuts.size(); ++b) {
      for (std::size_t c = b + 1; c < cuts.size(); ++c) {
        const Thresholds t{cuts[a], cuts[b], cuts[c]};
        std::size_t ok = 0;
        for (const auto& d : data) {
          const int pred = d.score < t.t1 ? 0 : d.score < t.t2 ? 1 : d.score < t.t3 ? 2 : 3;
          if (pred == ordinal(d.truth)) ++ok;
        }
        const double acc = static_cast<double>(ok) / static_cast<double>(data.size());
        if (acc > best.accuracy) best = {t, acc};
      }
    }
  }
  return best;
}

/// Equal-prior Bayes boundary between two Gaussians, found by bisection on
/// the log-density difference inside (m1, m2).
inline double gaussian_boundary(double m1, double s1, double m2, double s2) {
  auto f = [&](double x) {
    const double a = -std::log(s1) - (x - m1) * (x - m1) / (2 * s1 * s1);
    const double b = -std::log(s2) - (x - m2) * (x - m2) / (2 * s2 * s2);
    return a - b;
  };
  double lo = m1, hi = m2;
  for (int i = 0; i < 200; ++i) {
    const double mid = (lo + hi) / 2;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  return (lo + hi) / 2;
}

}  // namespace oracle

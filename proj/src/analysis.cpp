#include "ares/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "ares/defenses.hpp"
#include "ares/error.hpp"
#include "ares/game.hpp"

namespace ares {

StatSummary mean_ci95(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean_ci95: empty sample");
  StatSummary s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  // Two-pass variance with the compensating term for the residual mean error.
  double sq = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double d = v - s.mean;
    sq += d * d;
    comp += d;
  }
  const double var = (sq - comp * comp / static_cast<double>(s.n)) / static_cast<double>(s.n - 1);
  s.sample_std = std::sqrt(std::max(var, 0.0));
  s.ci95_half_width = kCi95Z * s.sample_std / std::sqrt(static_cast<double>(s.n));
  return s;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine_similarity");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na < 1e-300 || nb < 1e-300) {
    throw UndefinedSimilarityError("cosine similarity is undefined for a zero vector");
  }
  // Normalise first so the dot product cannot overflow.
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] / na) * (b[i] / nb);
  return std::clamp(acc, -1.0, 1.0);
}

SimilarityRecord instrument_episode_gradients(const DefensePool& pool, std::pair<std::size_t, std::size_t> pair,
                                              const EpisodeResult& episode) {
  if (pair.first >= pool.size() || pair.second >= pool.size()) {
    throw ArgumentError("instrumented pair (" + std::to_string(pair.first) + ", " + std::to_string(pair.second) +
                        ") outside pool of " + std::to_string(pool.size()));
  }
  SimilarityRecord rec;
  rec.pair = pair;
  const Model& a = pool.model(pair.first);
  const Model& b = pool.model(pair.second);
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& round : episode.rounds) {
    const Tensor ga = input_gradient(a, round.query, episode.true_label);
    const Tensor gb = input_gradient(b, round.query, episode.true_label);
    try {
      const double c = cosine_similarity(ga, gb);
      rec.per_round_cosines.emplace_back(c);
      sum += c;
      ++defined;
    } catch (const UndefinedSimilarityError&) {
      rec.per_round_cosines.emplace_back(std::nullopt);
      ++rec.undefined_rounds;
    }
  }
  if (defined > 0) rec.round_avg = sum / static_cast<double>(defined);
  return rec;
}

double final_perturbation_similarity(const EpisodeResult& a, const EpisodeResult& b) {
  if (!(a.x0 == b.x0) || a.true_label != b.true_label) {
    throw ArgumentError("final_perturbation_similarity: episodes start from different samples");
  }
  return cosine_similarity(a.final_x - a.x0, b.final_x - b.x0);
}

double adversarial_accuracy(std::span<const EpisodeResult> results) {
  if (results.empty()) throw ArgumentError("adversarial_accuracy: no episodes");
  const auto wins = std::count_if(results.begin(), results.end(),
                                  [](const EpisodeResult& r) { return r.winner == Winner::defender; });
  return static_cast<double>(wins) / static_cast<double>(results.size());
}

}  // namespace ares

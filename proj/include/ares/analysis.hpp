#pragma once

// Aggregate statistics and gradient-transferability measurements.

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ares/tensor.hpp"

namespace ares {

class DefensePool;
struct EpisodeResult;

// Normal-approximation interval: half width = 1.96 s / sqrt(n), 0 for n <= 1.
inline constexpr double kCi95Z = 1.96;

struct StatSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sample_std = 0.0;
  double ci95_half_width = 0.0;
};

StatSummary mean_ci95(std::span<const double> values);

// a.b / (|a| |b|), clamped to [-1, 1]. Throws UndefinedSimilarityError when
// either norm is below 1e-300.
double cosine_similarity(const Tensor& a, const Tensor& b);

struct SimilarityRecord {
  std::pair<std::size_t, std::size_t> pair{0, 0};
  // One entry per round; empty where the cosine was undefined.
  std::vector<std::optional<double>> per_round_cosines;
  std::optional<double> round_avg;  // mean of the defined cosines
  std::size_t undefined_rounds = 0;
  std::optional<double> final_perturbation_cosine;
};

// Gradients of both pair models at each round's query, evaluated at the
// episode's true label, regardless of which model answered.
SimilarityRecord instrument_episode_gradients(const DefensePool& pool, std::pair<std::size_t, std::size_t> pair,
                                              const EpisodeResult& episode);

// Cosine between the total perturbations of two episodes on the same sample.
double final_perturbation_similarity(const EpisodeResult& a, const EpisodeResult& b);

// Fraction of episodes won by the defender.
double adversarial_accuracy(std::span<const EpisodeResult> results);

}  // namespace ares

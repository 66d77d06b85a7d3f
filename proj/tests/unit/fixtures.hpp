#pragma once

#include "ares/data.hpp"
#include "ares/defenses.hpp"
#include "ares/model_zoo.hpp"

namespace fixture {

// Small 4-class blob task with two quickly trained models.
struct SmallWorld {
  ares::Dataset data;
  ares::Model natural;
  ares::Model other;
};

inline const SmallWorld& small_world() {
  static const SmallWorld w = [] {
    SmallWorld s;
    s.data = ares::generate_blobs({4, 8, 40, 0.6, 0.05, 3});
    ares::TrainingConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 1;
    auto spec = ares::ModelSpec::mlp("natural", 8, {16}, 4);
    s.natural = ares::train(spec, s.data, cfg).model;
    cfg.seed = 2;
    spec.name = "other";
    s.other = ares::train(spec, s.data, cfg).model;
    return s;
  }();
  return w;
}

}  // namespace fixture

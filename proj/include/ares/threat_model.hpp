#pragma once

#include <string>
#include <string_view>

namespace ares {

// What the defender reveals per query:
//   white_box       label, probabilities, loss gradient
//   soft_black_box  label, probabilities
//   hard_black_box  label
enum class ThreatModel { white_box, soft_black_box, hard_black_box };

inline bool exposes_probs(ThreatModel t) { return t != ThreatModel::hard_black_box; }
inline bool exposes_gradient(ThreatModel t) { return t == ThreatModel::white_box; }

std::string to_string(ThreatModel t);
// Throws ArgumentError on unknown names.
ThreatModel parse_threat_model(std::string_view name);

}  // namespace ares

#pragma once

#include <string>

#include "lteval/error.hpp"

namespace lteval {

struct ScoreScale {
  int min = 1;
  int max = 5;
};

inline constexpr ScoreScale kLikertScale{1, 5};
inline constexpr ScoreScale kVerseScale{1, 3};

enum class PercentMapping {
  MinMax,   // 100 * (s - min) / (max - min)
  OverMax,  // 100 * s / max
};

inline double to_percentage(double score, ScoreScale scale, PercentMapping mapping = PercentMapping::MinMax) {
  if (scale.max <= scale.min) throw Error(ErrorCode::ScaleViolation, "scale max must exceed min");
  if (score < scale.min || score > scale.max) {
    throw Error(ErrorCode::ScaleViolation, "score " + std::to_string(score) + " outside " +
                                               std::to_string(scale.min) + ".." + std::to_string(scale.max));
  }
  if (mapping == PercentMapping::OverMax) return 100.0 * score / scale.max;
  return 100.0 * (score - scale.min) / (scale.max - scale.min);
}

inline double to_percentage(int score, ScoreScale scale, PercentMapping mapping = PercentMapping::MinMax) {
  return to_percentage(static_cast<double>(score), scale, mapping);
}

}  // namespace lteval

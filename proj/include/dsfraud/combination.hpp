#pragma once

#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsfraud/error.hpp"
#include "dsfraud/evidence.hpp"

namespace dsfraud {

/// Combinations whose conflict reaches 1 - kTotalConflictTolerance are
/// rejected instead of being renormalized by a near-zero factor.
inline constexpr double kTotalConflictTolerance = 1e-12;

enum class CombinationMode {
  /// Dempster's rule: the product m1(B)m2(C) goes to B ∩ C.
  Standard,
  /// Binary-frame variant where only identical singleton pairs stay on the
  /// singleton and every other non-conflicting product lands on the whole
  /// frame. Not associative; n-ary use is a left fold in input order.
  PaperSimplified,
};

constexpr std::string_view to_string(CombinationMode mode) noexcept {
  return mode == CombinationMode::Standard ? "standard" : "paper";
}

inline std::optional<CombinationMode> parse_combination_mode(std::string_view text) {
  if (text == "standard") return CombinationMode::Standard;
  if (text == "paper") return CombinationMode::PaperSimplified;
  return std::nullopt;
}

struct CombinationResult {
  MassFunction mass;
  /// Total discarded mass over the fold: 1 - prod(1 - K_i).
  double conflict = 0.0;
  /// Pairwise K_i in fold order; empty for a single source.
  std::vector<double> step_conflicts;
};

namespace detail {

inline void require_same_frame(const MassFunction& m1, const MassFunction& m2) {
  if (!(m1.frame() == m2.frame())) throw Error(ErrorCode::FrameMismatch, "mass functions are defined on different frames");
}

inline void require_mode_supported(const Frame& frame, CombinationMode mode) {
  if (mode == CombinationMode::PaperSimplified && frame.size() != 2) {
    throw Error(ErrorCode::ModeUnsupported,
                "simplified combination needs a binary frame, got " + std::to_string(frame.size()) + " hypotheses");
  }
}

inline Mask cell_target(Mask b, Mask c, Mask full, CombinationMode mode) {
  const Mask meet = b & c;
  if (meet == 0 || mode == CombinationMode::Standard) return meet;
  return b == c ? b : full;
}

}  // namespace detail

/// Mass that two sources put on pairwise-disjoint sets.
inline double conflict(const MassFunction& m1, const MassFunction& m2) {
  detail::require_same_frame(m1, m2);
  double k = 0.0;
  for (const auto& b : m1.focal_elements()) {
    for (const auto& c : m2.focal_elements()) {
      if ((b.set & c.set) == 0) k += b.mass * c.mass;
    }
  }
  return k;
}

inline CombinationResult combine_pair(const MassFunction& m1, const MassFunction& m2,
                                      CombinationMode mode = CombinationMode::Standard) {
  detail::require_same_frame(m1, m2);
  detail::require_mode_supported(m1.frame(), mode);

  const Mask full = m1.frame().full_mask();
  std::map<Mask, double> cells;
  double k = 0.0;
  double kept = 0.0;
  for (const auto& b : m1.focal_elements()) {
    for (const auto& c : m2.focal_elements()) {
      const double product = b.mass * c.mass;
      const Mask target = detail::cell_target(b.set, c.set, full, mode);
      if (target == 0) {
        k += product;
      } else {
        cells[target] += product;
        kept += product;
      }
    }
  }
  if (k >= 1.0 - kTotalConflictTolerance || kept <= kTotalConflictTolerance) {
    throw Error(ErrorCode::TotalConflict, "sources are in total conflict (K = " + std::to_string(k) + ")");
  }

  // The kept mass equals 1 - K; dividing by it keeps symmetric cells exactly
  // symmetric. Without conflict nothing is rescaled.
  const double normalizer = k == 0.0 ? 1.0 : kept;
  std::vector<FocalElement> focal;
  focal.reserve(cells.size());
  for (const auto& [set, value] : cells) focal.push_back({set, value / normalizer});

  return {detail::assemble_mass(m1.frame(), std::move(focal)), k, {k}};
}

/// Left fold of combine_pair over `masses` in order.
inline CombinationResult combine_all(std::span<const MassFunction> masses,
                                     CombinationMode mode = CombinationMode::Standard) {
  if (masses.empty()) throw Error(ErrorCode::EmptyInput, "nothing to combine");
  for (const auto& m : masses.subspan(1)) detail::require_same_frame(masses.front(), m);
  detail::require_mode_supported(masses.front().frame(), mode);

  CombinationResult result{masses.front(), 0.0, {}};
  for (const auto& next : masses.subspan(1)) {
    auto step = combine_pair(result.mass, next, mode);
    // Same as 1 - prod(1 - K_i), exact for the first step.
    result.conflict += step.conflict * (1.0 - result.conflict);
    result.mass = std::move(step.mass);
    result.step_conflicts.push_back(step.conflict);
  }
  return result;
}

inline CombinationResult combine_all(std::initializer_list<MassFunction> masses,
                                     CombinationMode mode = CombinationMode::Standard) {
  return combine_all(std::span<const MassFunction>(masses.begin(), masses.size()), mode);
}

}  // namespace dsfraud

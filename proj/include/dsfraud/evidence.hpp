#pragma once

// Frames of discernment, hypothesis sets encoded as bit masks, basic
// probability assignments (mass functions) and the belief / plausibility
// measures derived from them.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dsfraud/error.hpp"

namespace dsfraud {

using Mask = std::uint32_t;

inline constexpr std::size_t kMaxFrameSize = 20;
inline constexpr double kNormalizationTolerance = 1e-9;

inline constexpr std::string_view kFraud = "fraud";
inline constexpr std::string_view kGenuine = "genuine";

class HypothesisSet;

/// Ordered list of mutually exclusive hypotheses. Copies share the label
/// storage; two frames are equal when their labels are equal.
class Frame {
 public:
  explicit Frame(std::vector<std::string> labels) {
    if (labels.empty()) throw Error(ErrorCode::InvalidFrame, "frame needs at least one hypothesis");
    if (labels.size() > kMaxFrameSize) {
      throw Error(ErrorCode::InvalidFrame,
                  "frame has " + std::to_string(labels.size()) + " hypotheses, limit is " +
                      std::to_string(kMaxFrameSize));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].empty()) throw Error(ErrorCode::InvalidFrame, "hypothesis labels must be non-empty");
      for (std::size_t j = 0; j < i; ++j) {
        if (labels[i] == labels[j]) throw Error(ErrorCode::InvalidFrame, "duplicate hypothesis '" + labels[i] + "'");
      }
    }
    labels_ = std::make_shared<const std::vector<std::string>>(std::move(labels));
  }

  /// The {fraud, genuine} frame used for transaction scoring.
  static const Frame& binary() {
    static const Frame frame({std::string(kFraud), std::string(kGenuine)});
    return frame;
  }

  std::size_t size() const noexcept { return labels_->size(); }
  const std::vector<std::string>& labels() const noexcept { return *labels_; }
  Mask full_mask() const noexcept { return static_cast<Mask>((std::uint64_t{1} << size()) - 1); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < size(); ++i) {
      if ((*labels_)[i] == label) return i;
    }
    return std::nullopt;
  }

  HypothesisSet empty() const;
  HypothesisSet full() const;
  HypothesisSet singleton(std::size_t index) const;
  HypothesisSet singleton(std::string_view label) const;
  HypothesisSet subset(std::initializer_list<std::string_view> labels) const;
  HypothesisSet from_mask(Mask mask) const;

  friend bool operator==(const Frame& a, const Frame& b) {
    return a.labels_ == b.labels_ || *a.labels_ == *b.labels_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> labels_;
};

/// An element of the power set of a frame.
class HypothesisSet {
 public:
  HypothesisSet(Frame frame, Mask mask) : frame_(std::move(frame)), mask_(mask) {
    if ((mask_ & ~frame_.full_mask()) != 0) {
      throw Error(ErrorCode::ForeignSet, "mask uses bits outside the frame");
    }
  }

  const Frame& frame() const noexcept { return frame_; }
  Mask mask() const noexcept { return mask_; }

  bool is_empty() const noexcept { return mask_ == 0; }
  bool is_full() const noexcept { return mask_ == frame_.full_mask(); }
  bool is_singleton() const noexcept { return std::has_single_bit(mask_); }
  std::size_t cardinality() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }
  bool contains(std::size_t index) const noexcept { return index < frame_.size() && ((mask_ >> index) & 1U) != 0; }

  HypothesisSet complement() const { return {frame_, frame_.full_mask() & ~mask_}; }

  /// "{fraud,genuine}" style rendering; the empty set prints as "{}".
  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < frame_.size(); ++i) {
      if (!contains(i)) continue;
      if (!first) out += ',';
      out += frame_.labels()[i];
      first = false;
    }
    return out + "}";
  }

  friend bool operator==(const HypothesisSet& a, const HypothesisSet& b) {
    return a.mask_ == b.mask_ && a.frame_ == b.frame_;
  }

  friend HypothesisSet operator&(const HypothesisSet& a, const HypothesisSet& b) {
    require_same_frame(a, b);
    return {a.frame_, a.mask_ & b.mask_};
  }

  friend HypothesisSet operator|(const HypothesisSet& a, const HypothesisSet& b) {
    require_same_frame(a, b);
    return {a.frame_, a.mask_ | b.mask_};
  }

 private:
  static void require_same_frame(const HypothesisSet& a, const HypothesisSet& b) {
    if (!(a.frame_ == b.frame_)) throw Error(ErrorCode::ForeignSet, "sets belong to different frames");
  }

  Frame frame_;
  Mask mask_;
};

inline HypothesisSet Frame::empty() const { return {*this, 0}; }
inline HypothesisSet Frame::full() const { return {*this, full_mask()}; }

inline HypothesisSet Frame::singleton(std::size_t index) const {
  if (index >= size()) throw Error(ErrorCode::ForeignSet, "hypothesis index out of range");
  return {*this, Mask{1} << index};
}

inline HypothesisSet Frame::singleton(std::string_view label) const {
  auto index = index_of(label);
  if (!index) throw Error(ErrorCode::ForeignSet, "unknown hypothesis '" + std::string(label) + "'");
  return singleton(*index);
}

inline HypothesisSet Frame::subset(std::initializer_list<std::string_view> labels) const {
  Mask mask = 0;
  for (auto label : labels) mask |= singleton(label).mask();
  return {*this, mask};
}

inline HypothesisSet Frame::from_mask(Mask mask) const { return {*this, mask}; }

struct MassAssignment {
  HypothesisSet set;
  double mass;
};

struct FocalElement {
  Mask set;
  double mass;

  friend bool operator==(const FocalElement&, const FocalElement&) = default;
};

class MassFunction;

namespace detail {
MassFunction assemble_mass(Frame frame, std::vector<FocalElement> focal);
}

/// A basic probability assignment over the power set of a frame. Only focal
/// elements (strictly positive masses) are stored, sorted by mask. Instances
/// are immutable and always satisfy the mass axioms.
class MassFunction {
 public:
  const Frame& frame() const noexcept { return frame_; }
  std::span<const FocalElement> focal_elements() const noexcept { return focal_; }

  double mass(Mask set) const noexcept {
    auto it = std::lower_bound(focal_.begin(), focal_.end(), set,
                               [](const FocalElement& f, Mask m) { return f.set < m; });
    return (it != focal_.end() && it->set == set) ? it->mass : 0.0;
  }

  double mass(const HypothesisSet& set) const {
    require_member(set);
    return mass(set.mask());
  }

  void require_member(const HypothesisSet& set) const {
    if (!(set.frame() == frame_)) {
      throw Error(ErrorCode::ForeignSet, "set " + set.to_string() + " is not from this mass function's frame");
    }
  }

  friend bool operator==(const MassFunction& a, const MassFunction& b) {
    return a.frame_ == b.frame_ && a.focal_ == b.focal_;
  }

 private:
  MassFunction(Frame frame, std::vector<FocalElement> focal) : frame_(std::move(frame)), focal_(std::move(focal)) {}

  friend MassFunction detail::assemble_mass(Frame frame, std::vector<FocalElement> focal);

  Frame frame_;
  std::vector<FocalElement> focal_;
};

namespace detail {

// Validates masses that are already normalized by construction (e.g. the
// output of a combination) without rescaling them.
inline MassFunction assemble_mass(Frame frame, std::vector<FocalElement> focal) {
  std::erase_if(focal, [](const FocalElement& f) { return f.mass == 0.0; });
  std::sort(focal.begin(), focal.end(), [](const FocalElement& a, const FocalElement& b) { return a.set < b.set; });
  double total = 0.0;
  for (std::size_t i = 0; i < focal.size(); ++i) {
    const auto& f = focal[i];
    if (!std::isfinite(f.mass) || f.mass < 0.0) {
      throw Error(ErrorCode::NegativeMass, "mass " + std::to_string(f.mass) + " is not a finite non-negative number");
    }
    if (f.set == 0) throw Error(ErrorCode::EmptySetMass, "the empty set carries mass " + std::to_string(f.mass));
    if ((f.set & ~frame.full_mask()) != 0) throw Error(ErrorCode::ForeignSet, "mask uses bits outside the frame");
    if (i > 0 && focal[i - 1].set == f.set) {
      throw Error(ErrorCode::DuplicateSet, "set " + frame.from_mask(f.set).to_string() + " assigned twice");
    }
    total += f.mass;
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw Error(ErrorCode::NotNormalized, "masses sum to " + std::to_string(total));
  }
  return MassFunction(std::move(frame), std::move(focal));
}

}  // namespace detail

/// Builds a validated mass function. Sums within 1e-9 of one are rescaled
/// by their total so that rounded decimal inputs are accepted.
inline MassFunction make_mass(const Frame& frame, std::span<const MassAssignment> assignments) {
  std::vector<FocalElement> focal;
  focal.reserve(assignments.size());
  for (const auto& a : assignments) {
    if (!(a.set.frame() == frame)) {
      throw Error(ErrorCode::ForeignSet, "set " + a.set.to_string() + " is not from the target frame");
    }
    if (std::any_of(focal.begin(), focal.end(), [&](const FocalElement& f) { return f.set == a.set.mask(); })) {
      throw Error(ErrorCode::DuplicateSet, "set " + a.set.to_string() + " assigned twice");
    }
    if (!std::isfinite(a.mass) || a.mass < 0.0) {
      throw Error(ErrorCode::NegativeMass,
                  "mass " + std::to_string(a.mass) + " on " + a.set.to_string() + " is not a finite non-negative number");
    }
    if (a.set.is_empty() && a.mass != 0.0) {
      throw Error(ErrorCode::EmptySetMass, "the empty set carries mass " + std::to_string(a.mass));
    }
    focal.push_back({a.set.mask(), a.mass});
  }

  double total = 0.0;
  for (const auto& f : focal) total += f.mass;
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw Error(ErrorCode::NotNormalized, "masses sum to " + std::to_string(total));
  }
  for (auto& f : focal) f.mass /= total;
  return detail::assemble_mass(frame, std::move(focal));
}

inline MassFunction make_mass(const Frame& frame, std::initializer_list<MassAssignment> assignments) {
  return make_mass(frame, std::span<const MassAssignment>(assignments.begin(), assignments.size()));
}

/// Total ignorance: all mass on the whole frame.
inline MassFunction vacuous(const Frame& frame) {
  return detail::assemble_mass(frame, {{frame.full_mask(), 1.0}});
}

/// Sum of the masses of all non-empty subsets of `a`.
inline double belief(const MassFunction& m, const HypothesisSet& a) {
  m.require_member(a);
  if (a.is_full()) return 1.0;
  double total = 0.0;
  for (const auto& f : m.focal_elements()) {
    if ((f.set & ~a.mask()) == 0) total += f.mass;
  }
  return total;
}

/// Sum of the masses of all sets intersecting `a`.
inline double plausibility(const MassFunction& m, const HypothesisSet& a) {
  m.require_member(a);
  if (a.is_empty()) return 0.0;
  if (a.is_full()) return 1.0;
  double total = 0.0;
  for (const auto& f : m.focal_elements()) {
    if ((f.set & a.mask()) != 0) total += f.mass;
  }
  return total;
}

struct BeliefInterval {
  double bel;
  double pl;

  double width() const noexcept { return pl - bel; }
};

inline BeliefInterval interval(const MassFunction& m, const HypothesisSet& a) {
  return {belief(m, a), plausibility(m, a)};
}

/// True when every focal element is a singleton, in which case belief and
/// plausibility coincide with an ordinary probability distribution.
inline bool is_bayesian(const MassFunction& m) {
  return std::all_of(m.focal_elements().begin(), m.focal_elements().end(),
                     [](const FocalElement& f) { return std::has_single_bit(f.set); });
}

}  // namespace dsfraud

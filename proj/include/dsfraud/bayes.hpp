#pragma once

// Naive-Bayes fusion of triggered evidence over {fraud, genuine}. Only
// triggered evidence contributes a likelihood factor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

#include "dsfraud/error.hpp"

namespace dsfraud {

struct EvidenceCounts {
  std::uint64_t triggered_fraud = 0;
  std::uint64_t triggered_genuine = 0;

  friend bool operator==(const EvidenceCounts&, const EvidenceCounts&) = default;
};

/// Class totals and per-evidence trigger counts from labeled transactions.
struct LabeledHistory {
  std::uint64_t total = 0;
  std::uint64_t fraud_count = 0;
  std::map<std::string, EvidenceCounts, std::less<>> evidence;

  std::uint64_t genuine_count() const noexcept { return total - fraud_count; }

  void validate() const {
    if (total == 0) throw Error(ErrorCode::EmptyHistory, "history contains no transactions");
    if (fraud_count > total) throw Error(ErrorCode::InvalidHistory, "more frauds than transactions");
    for (const auto& [id, counts] : evidence) {
      if (counts.triggered_fraud > fraud_count || counts.triggered_genuine > genuine_count()) {
        throw Error(ErrorCode::InvalidHistory, "evidence '" + id + "' is triggered more often than its class occurs");
      }
    }
  }

  friend bool operator==(const LabeledHistory&, const LabeledHistory&) = default;
};

struct Likelihood {
  double given_fraud;    // P(E | fraud)
  double given_genuine;  // P(E | genuine)

  friend bool operator==(const Likelihood&, const Likelihood&) = default;
};

struct BayesModel {
  double prior_fraud = 0.0;
  double prior_genuine = 0.0;
  std::map<std::string, Likelihood, std::less<>> likelihoods;
  double smoothing = 0.0;

  const Likelihood& likelihood(std::string_view id) const {
    auto it = likelihoods.find(id);
    if (it == likelihoods.end()) throw Error(ErrorCode::UnknownEvidence, "no likelihood for evidence '" + std::string(id) + "'");
    return it->second;
  }

  friend bool operator==(const BayesModel&, const BayesModel&) = default;
};

struct Posterior {
  double p_fraud;
  double p_genuine;
  /// P(E), the normalizing constant. May underflow to 0 on the log path;
  /// log_marginal stays finite there.
  double marginal;
  double log_marginal;
};

/// Priors from class frequencies; likelihoods with additive smoothing
/// (count + alpha) / (class count + 2 alpha).
inline BayesModel fit(const LabeledHistory& history, double smoothing = 0.0) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorCode::InvalidSmoothing, "smoothing must be a finite value >= 0");
  }
  history.validate();
  const auto frauds = static_cast<double>(history.fraud_count);
  const auto genuines = static_cast<double>(history.genuine_count());
  if (smoothing == 0.0 && (frauds == 0.0 || genuines == 0.0)) {
    throw Error(ErrorCode::DegenerateClass, "both classes must be present to fit without smoothing");
  }

  BayesModel model;
  model.prior_fraud = frauds / static_cast<double>(history.total);
  model.prior_genuine = genuines / static_cast<double>(history.total);
  model.smoothing = smoothing;
  for (const auto& [id, counts] : history.evidence) {
    model.likelihoods.emplace(
        id, Likelihood{(static_cast<double>(counts.triggered_fraud) + smoothing) / (frauds + 2.0 * smoothing),
                       (static_cast<double>(counts.triggered_genuine) + smoothing) / (genuines + 2.0 * smoothing)});
  }
  return model;
}

namespace detail {

inline std::set<std::string_view> evidence_set(const BayesModel& model, std::span<const std::string> ids) {
  if (ids.empty()) throw Error(ErrorCode::NoEvidence, "posterior needs at least one piece of evidence");
  std::set<std::string_view> unique;
  for (const auto& id : ids) {
    model.likelihood(id);
    unique.insert(id);
  }
  return unique;
}

}  // namespace detail

/// Direct product form. Duplicate ids count once.
inline Posterior posterior(const BayesModel& model, std::span<const std::string> evidence_ids) {
  double fraud = model.prior_fraud;
  double genuine = model.prior_genuine;
  for (auto id : detail::evidence_set(model, evidence_ids)) {
    const auto& l = model.likelihood(id);
    fraud *= l.given_fraud;
    genuine *= l.given_genuine;
  }
  const double z = fraud + genuine;
  if (!(z > 0.0)) throw Error(ErrorCode::ZeroMarginal, "both class likelihood products are zero");
  return {fraud / z, genuine / z, z, std::log(z)};
}

/// Log-space form of posterior(): sums log factors and normalizes after
/// subtracting the larger log-numerator, so it stays finite for many sources.
inline Posterior posterior_log(const BayesModel& model, std::span<const std::string> evidence_ids) {
  const auto ids = detail::evidence_set(model, evidence_ids);
  if (!(model.prior_fraud > 0.0 && model.prior_genuine > 0.0)) {
    throw Error(ErrorCode::NonPositiveLikelihood, "log-space posterior needs positive priors");
  }
  double log_fraud = std::log(model.prior_fraud);
  double log_genuine = std::log(model.prior_genuine);
  for (auto id : ids) {
    const auto& l = model.likelihood(id);
    if (!(l.given_fraud > 0.0 && l.given_genuine > 0.0)) {
      throw Error(ErrorCode::NonPositiveLikelihood, "evidence '" + std::string(id) + "' has a zero likelihood");
    }
    log_fraud += std::log(l.given_fraud);
    log_genuine += std::log(l.given_genuine);
  }
  const double top = std::max(log_fraud, log_genuine);
  const double fraud = std::exp(log_fraud - top);
  const double genuine = std::exp(log_genuine - top);
  const double scaled_z = fraud + genuine;
  const double log_z = top + std::log(scaled_z);
  return {fraud / scaled_z, genuine / scaled_z, std::exp(log_z), log_z};
}

}  // namespace dsfraud

#pragma once

// Per-transaction fusion of triggered rules into a fraud interval, threshold
// flags and a deterministic ranking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dsfraud/bayes.hpp"
#include "dsfraud/combination.hpp"
#include "dsfraud/error.hpp"
#include "dsfraud/evidence.hpp"

namespace dsfraud {

/// Masses given directly on {fraud}, {genuine} and the whole frame.
struct ExplicitMass {
  double fraud;
  double genuine;
  double uncertain;
};

/// A fraud probability `score` discounted by `uncertainty`:
/// fraud = score (1 - u), genuine = (1 - score)(1 - u), uncertain = u.
struct ScoredMass {
  double score;
  double uncertainty;
};

using MassSpec = std::variant<ExplicitMass, ScoredMass>;

struct RuleSpec {
  std::string id;
  std::string description;
  MassSpec mass;

  ExplicitMass expanded() const {
    if (const auto* s = std::get_if<ScoredMass>(&mass)) {
      return {s->score * (1.0 - s->uncertainty), (1.0 - s->score) * (1.0 - s->uncertainty), s->uncertainty};
    }
    return std::get<ExplicitMass>(mass);
  }

  void validate() const {
    auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    auto fail = [&](std::string_view field, std::string_view what) {
      throw Error(ErrorCode::InvalidRule, "rule '" + id + "': field '" + std::string(field) + "' " + std::string(what));
    };
    if (id.empty()) throw Error(ErrorCode::InvalidRule, "rule id must be non-empty");
    if (const auto* s = std::get_if<ScoredMass>(&mass)) {
      if (!in_unit(s->score)) fail("score", "must lie in [0,1]");
      if (!in_unit(s->uncertainty)) fail("uncertainty", "must lie in [0,1]");
      return;
    }
    const auto& e = std::get<ExplicitMass>(mass);
    if (!(std::isfinite(e.fraud) && e.fraud >= 0.0)) fail("m_fraud", "must be >= 0");
    if (!(std::isfinite(e.genuine) && e.genuine >= 0.0)) fail("m_genuine", "must be >= 0");
    if (!(std::isfinite(e.uncertain) && e.uncertain >= 0.0)) fail("m_uncertain", "must be >= 0");
    if (std::abs(e.fraud + e.genuine + e.uncertain - 1.0) > kNormalizationTolerance) {
      fail("m_fraud+m_genuine+m_uncertain", "must sum to 1");
    }
  }

  MassFunction to_mass() const {
    const auto& frame = Frame::binary();
    const auto m = expanded();
    return make_mass(frame, {{frame.singleton(kFraud), m.fraud},
                             {frame.singleton(kGenuine), m.genuine},
                             {frame.full(), m.uncertain}});
  }
};

struct DsCombiner {
  CombinationMode mode = CombinationMode::Standard;
};

/// Rule ids double as evidence ids of the model.
struct BayesCombiner {
  std::shared_ptr<const BayesModel> model;
};

using Combiner = std::variant<DsCombiner, BayesCombiner>;

/// "ds-standard", "ds-paper" or "bayes".
inline std::string combiner_name(const Combiner& combiner) {
  if (const auto* ds = std::get_if<DsCombiner>(&combiner)) return "ds-" + std::string(to_string(ds->mode));
  return "bayes";
}

class RuleSet {
 public:
  RuleSet(std::vector<RuleSpec> rules, Combiner combiner, double threshold)
      : combiner_(std::move(combiner)), threshold_(threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
      throw Error(ErrorCode::InvalidThreshold, "threshold must lie in [0,1]");
    }
    if (const auto* bayes = std::get_if<BayesCombiner>(&combiner_); bayes != nullptr && !bayes->model) {
      throw Error(ErrorCode::InvalidRule, "bayes combiner needs a model");
    }
    for (auto& rule : rules) {
      rule.validate();
      if (rules_.contains(rule.id)) {
        throw Error(ErrorCode::DuplicateRule, "rule id '" + rule.id + "' appears more than once");
      }
      auto id = rule.id;
      rules_.emplace(std::move(id), std::move(rule));
    }
  }

  const RuleSpec& rule(std::string_view id) const {
    auto it = rules_.find(id);
    if (it == rules_.end()) throw Error(ErrorCode::UnknownRule, "unknown rule '" + std::string(id) + "'");
    return it->second;
  }

  const std::map<std::string, RuleSpec, std::less<>>& rules() const noexcept { return rules_; }
  const Combiner& combiner() const noexcept { return combiner_; }
  double threshold() const noexcept { return threshold_; }

 private:
  std::map<std::string, RuleSpec, std::less<>> rules_;
  Combiner combiner_;
  double threshold_;
};

struct Transaction {
  std::string id;
  std::vector<std::string> triggered;
  /// Opaque pass-through (serialized JSON in batch files).
  std::string payload;
};

struct Flags {
  bool suspicious = false;
  bool confirmed = false;

  friend bool operator==(const Flags&, const Flags&) = default;
};

struct ScoreReport {
  std::string transaction_id;
  double bel_fraud = 0.0;
  double pl_fraud = 0.0;
  double point_estimate = 0.0;
  double conflict = 0.0;
  std::size_t n_sources = 0;
  Flags flags;
  std::size_t rank = 0;
  std::string payload;

  friend bool operator==(const ScoreReport&, const ScoreReport&) = default;
};

/// confirmed: the lower bound exceeds the threshold; suspicious: the upper
/// bound does.
inline Flags classify(double bel_fraud, double pl_fraud, double threshold) {
  return {pl_fraud > threshold, bel_fraud > threshold};
}

/// One binary-frame mass per triggered rule, in trigger order.
inline std::vector<MassFunction> masses_for(const RuleSet& ruleset, const Transaction& txn) {
  if (txn.triggered.empty()) throw Error(ErrorCode::NoEvidence, "transaction '" + txn.id + "' triggered no rules");
  std::vector<MassFunction> masses;
  masses.reserve(txn.triggered.size());
  for (std::size_t i = 0; i < txn.triggered.size(); ++i) {
    const auto& id = txn.triggered[i];
    if (std::find(txn.triggered.begin(), txn.triggered.begin() + static_cast<std::ptrdiff_t>(i), id) !=
        txn.triggered.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw Error(ErrorCode::DuplicateTrigger, "rule '" + id + "' triggered twice in transaction '" + txn.id + "'");
    }
    masses.push_back(ruleset.rule(id).to_mass());
  }
  return masses;
}

inline ScoreReport score(const RuleSet& ruleset, const Transaction& txn) {
  ScoreReport report;
  report.transaction_id = txn.id;
  report.payload = txn.payload;
  report.n_sources = txn.triggered.size();

  if (const auto* ds = std::get_if<DsCombiner>(&ruleset.combiner())) {
    const auto masses = masses_for(ruleset, txn);
    const auto combined = combine_all(masses, ds->mode);
    const auto fraud = interval(combined.mass, Frame::binary().singleton(kFraud));
    report.bel_fraud = fraud.bel;
    report.pl_fraud = fraud.pl;
    report.point_estimate = fraud.bel;
    report.conflict = combined.conflict;
  } else {
    const auto& model = *std::get<BayesCombiner>(ruleset.combiner()).model;
    masses_for(ruleset, txn);  // same rule and trigger checks as the DS path
    bool all_positive = model.prior_fraud > 0.0 && model.prior_genuine > 0.0;
    for (const auto& id : txn.triggered) {
      const auto& l = model.likelihood(id);
      all_positive = all_positive && l.given_fraud > 0.0 && l.given_genuine > 0.0;
    }
    const auto post = all_positive ? posterior_log(model, txn.triggered) : posterior(model, txn.triggered);
    report.bel_fraud = report.pl_fraud = report.point_estimate = post.p_fraud;
  }
  report.flags = classify(report.bel_fraud, report.pl_fraud, ruleset.threshold());
  return report;
}

/// Descending by belief, then plausibility, then ascending transaction id.
/// Assigns ranks 1..n.
inline std::vector<ScoreReport> rank(std::vector<ScoreReport> reports) {
  std::stable_sort(reports.begin(), reports.end(), [](const ScoreReport& a, const ScoreReport& b) {
    if (a.bel_fraud != b.bel_fraud) return a.bel_fraud > b.bel_fraud;
    if (a.pl_fraud != b.pl_fraud) return a.pl_fraud > b.pl_fraud;
    return a.transaction_id < b.transaction_id;
  });
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = i + 1;
  return reports;
}

/// A transaction that produced no report.
struct Unscored {
  enum class Reason { Skipped, Failed };

  std::string transaction_id;
  Reason reason;
  std::string error;  // error code name when Failed
  std::string message;
  std::string payload;
};

struct BatchResult {
  std::vector<ScoreReport> ranked;
  std::vector<Unscored> unscored;  // input order
};

/// Scores every transaction; empty trigger lists are skipped and library
/// errors mark the record as failed without aborting the batch.
inline BatchResult score_batch(const RuleSet& ruleset, std::span<const Transaction> batch) {
  BatchResult result;
  std::vector<ScoreReport> reports;
  for (const auto& txn : batch) {
    if (txn.triggered.empty()) {
      result.unscored.push_back({txn.id, Unscored::Reason::Skipped, "", "no triggered rules", txn.payload});
      continue;
    }
    try {
      reports.push_back(score(ruleset, txn));
    } catch (const Error& e) {
      result.unscored.push_back(
          {txn.id, Unscored::Reason::Failed, std::string(to_string(e.code())), e.what(), txn.payload});
    }
  }
  result.ranked = rank(std::move(reports));
  return result;
}

}  // namespace dsfraud

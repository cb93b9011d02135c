#pragma once

// `dsfraud` command-line front end: fit, score and combine subcommands.
// run() takes explicit streams so it can be driven in-process.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "dsfraud/bayes.hpp"
#include "dsfraud/combination.hpp"
#include "dsfraud/error.hpp"
#include "dsfraud/evidence.hpp"
#include "dsfraud/io.hpp"
#include "dsfraud/scoring.hpp"

namespace dsfraud::cli {

enum ExitCode : int {
  kSuccess = 0,
  kNothingScored = 1,
  kInputError = 2,
  kFitError = 3,
};

namespace detail {

inline std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::string owned(text);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(owned.c_str(), &end);
  if (errno != 0 || end != owned.c_str() + owned.size()) return std::nullopt;
  return value;
}

/// "f=<x>,g=<y>[,u=<z>]" on the binary frame; absent keys carry zero mass.
inline MassFunction parse_mass_flag(std::string_view text) {
  const auto& frame = Frame::binary();
  double masses[3] = {0.0, 0.0, 0.0};
  bool seen[3] = {false, false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ParseError, "expected key=value, got '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    const int slot = key == "f" ? 0 : key == "g" ? 1 : key == "u" ? 2 : -1;
    if (slot < 0) throw Error(ErrorCode::ParseError, "unknown key '" + std::string(key) + "', use f, g or u");
    if (seen[slot]) throw Error(ErrorCode::ParseError, "key '" + std::string(key) + "' given twice");
    const auto value = parse_double(item.substr(eq + 1));
    if (!value) throw Error(ErrorCode::ParseError, "'" + std::string(item.substr(eq + 1)) + "' is not a number");
    masses[slot] = *value;
    seen[slot] = true;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return make_mass(frame, {{frame.singleton(kFraud), masses[0]},
                           {frame.singleton(kGenuine), masses[1]},
                           {frame.full(), masses[2]}});
}

struct FitOptions {
  std::string history;
  std::string output;
  double smoothing = 0.0;
};

inline int cmd_fit(const FitOptions& opts, std::ostream& out, std::ostream& err) {
  LabeledHistory history;
  try {
    history = io::read_history_csv(std::filesystem::path(opts.history));
  } catch (const Error& e) {
    err << "error: " << opts.history << ": " << e.what() << '\n';
    return kInputError;
  }

  BayesModel model;
  try {
    model = fit(history, opts.smoothing);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFitError;
  }

  try {
    io::save_model(model, opts.output);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  out << "transactions " << history.total << "  fraud " << history.fraud_count << "  genuine "
      << history.genuine_count() << "  smoothing " << model.smoothing << '\n';
  out << "prior_fraud   " << fixed(model.prior_fraud, 4) << '\n';
  out << "prior_genuine " << fixed(model.prior_genuine, 4) << '\n';
  std::size_t width = 4;
  for (const auto& [id, _] : model.likelihoods) width = std::max(width, id.size());
  const int w = static_cast<int>(width);
  out << std::left << std::setw(w) << "rule" << std::right << std::setw(8) << "fraud" << std::setw(9) << "genuine"
      << std::setw(12) << "P(E|fraud)" << std::setw(14) << "P(E|genuine)" << '\n';
  for (const auto& [id, l] : model.likelihoods) {
    const auto& counts = history.evidence.at(id);
    out << std::left << std::setw(w) << id << std::right << std::setw(8) << counts.triggered_fraud << std::setw(9)
        << counts.triggered_genuine << std::setw(12) << fixed(l.given_fraud, 4) << std::setw(14)
        << fixed(l.given_genuine, 4) << '\n';
  }
  out << "model written to " << opts.output << '\n';
  return kSuccess;
}

struct ScoreOptions {
  std::string config;
  std::string batch;
  std::string output = "table";
  std::optional<std::string> combiner;  // ds | bayes
  std::optional<std::string> mode;      // standard | paper
  std::optional<double> threshold;
  std::optional<std::string> model;
};

inline int cmd_score(const ScoreOptions& opts, std::ostream& out, std::ostream& err) {
  const auto format = io::parse_report_format(opts.output);
  if (!format) {
    err << "error: --output must be table, csv or jsonl\n";
    return kInputError;
  }

  std::optional<RuleSet> ruleset;
  std::vector<Transaction> batch;
  try {
    auto config = io::load_rule_config(opts.config);
    const std::string kind = opts.combiner.value_or(config.combiner == "bayes" ? "bayes" : "ds");
    if (kind != "ds" && kind != "bayes") throw Error(ErrorCode::ParseError, "--combiner must be ds or bayes");

    Combiner combiner;
    if (kind == "ds") {
      auto mode = config.combiner == "ds-paper" ? CombinationMode::PaperSimplified : CombinationMode::Standard;
      if (opts.mode) {
        auto parsed = parse_combination_mode(*opts.mode);
        if (!parsed) throw Error(ErrorCode::ParseError, "--mode must be standard or paper");
        mode = *parsed;
      }
      combiner = DsCombiner{mode};
    } else {
      if (opts.mode) throw Error(ErrorCode::ParseError, "--mode only applies to the ds combiner");
      std::optional<std::filesystem::path> model_path = config.model_path;
      if (opts.model) model_path = *opts.model;
      if (!model_path) throw Error(ErrorCode::ParseError, "bayes combiner needs a model (config 'model' or --model)");
      combiner = BayesCombiner{std::make_shared<const BayesModel>(io::load_model(*model_path))};
    }
    ruleset.emplace(std::move(config.rules), std::move(combiner), opts.threshold.value_or(config.threshold));
    batch = io::read_batch_jsonl(std::filesystem::path(opts.batch));
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  const auto result = score_batch(*ruleset, batch);
  io::write_reports(out, result, {combiner_name(ruleset->combiner()), ruleset->threshold()}, *format);
  for (const auto& u : result.unscored) {
    if (u.reason == Unscored::Reason::Failed) err << "warning: " << u.transaction_id << ": " << u.message << '\n';
  }
  if (result.ranked.empty()) {
    err << "error: no transaction could be scored\n";
    return kNothingScored;
  }
  return kSuccess;
}

struct CombineOptions {
  std::vector<std::string> masses;
  std::string mode = "standard";
};

inline int cmd_combine(const CombineOptions& opts, std::ostream& out, std::ostream& err) {
  const auto mode = parse_combination_mode(opts.mode);
  if (!mode) {
    err << "error: --mode must be standard or paper\n";
    return kInputError;
  }
  if (opts.masses.size() < 2) {
    err << "error: combine needs at least two --mass flags\n";
    return kInputError;
  }
  std::vector<MassFunction> masses;
  for (std::size_t i = 0; i < opts.masses.size(); ++i) {
    try {
      masses.push_back(parse_mass_flag(opts.masses[i]));
    } catch (const Error& e) {
      err << "error: --mass #" << i + 1 << " '" << opts.masses[i] << "': " << e.what() << '\n';
      return kInputError;
    }
  }

  CombinationResult result{masses.front(), 0.0, {}};
  try {
    result = combine_all(masses, *mode);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  const auto& frame = Frame::binary();
  const auto fraud = interval(result.mass, frame.singleton(kFraud));
  out << "mode: " << to_string(*mode) << '\n';
  for (std::size_t i = 0; i < result.step_conflicts.size(); ++i) {
    out << "step " << i + 1 << ": K=" << fixed(result.step_conflicts[i], 4) << '\n';
  }
  out << "K_total=" << fixed(result.conflict, 4) << '\n';
  out << "m(f)=" << fixed(result.mass.mass(frame.singleton(kFraud)), 4) << '\n';
  out << "m(g)=" << fixed(result.mass.mass(frame.singleton(kGenuine)), 4) << '\n';
  out << "m(u)=" << fixed(result.mass.mass(frame.full()), 4) << '\n';
  out << "bel(f)=" << fixed(fraud.bel, 4) << " pl(f)=" << fixed(fraud.pl, 4) << '\n';
  return kSuccess;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fuse fraud evidence with Dempster-Shafer or naive Bayes and rank transactions", "dsfraud"};
  app.require_subcommand(1);

  detail::FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a naive Bayes model from a labeled history CSV");
  fit_cmd->add_option("history", fit_opts.history, "CSV with header txn_id,label,rule_id")->required();
  fit_cmd->add_option("-o,--output", fit_opts.output, "Model file to write")->required();
  fit_cmd->add_option("--smoothing", fit_opts.smoothing, "Additive smoothing alpha (>= 0)")->capture_default_str();

  detail::ScoreOptions score_opts;
  auto* score_cmd = app.add_subcommand("score", "Score and rank a transaction batch");
  score_cmd->add_option("config", score_opts.config, "Rule configuration (JSON)")->required();
  score_cmd->add_option("batch", score_opts.batch, "Transaction batch (JSON lines)")->required();
  score_cmd->add_option("--output", score_opts.output, "table, csv or jsonl")->capture_default_str();
  score_cmd->add_option("--combiner", score_opts.combiner, "Override the configured combiner: ds or bayes");
  score_cmd->add_option("--mode", score_opts.mode, "DS combination mode: standard or paper");
  score_cmd->add_option("--threshold", score_opts.threshold, "Override the decision threshold");
  score_cmd->add_option("--model", score_opts.model, "Model file for the bayes combiner");

  detail::CombineOptions combine_opts;
  auto* combine_cmd = app.add_subcommand("combine", "Combine binary-frame masses and print the result");
  combine_cmd->add_option("--mass", combine_opts.masses, "f=<x>,g=<y>[,u=<z>] (repeat)")->take_all();
  combine_cmd->add_option("--mode", combine_opts.mode, "standard or paper")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (*fit_cmd) return detail::cmd_fit(fit_opts, out, err);
    if (*score_cmd) return detail::cmd_score(score_opts, out, err);
    return detail::cmd_combine(combine_opts, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace dsfraud::cli

#pragma once

// Readers and writers for the on-disk formats: labeled history CSV, model
// and rule configuration JSON, transaction batch JSONL and score reports.
// Schemas are documented in docs/formats.md.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsfraud/bayes.hpp"
#include "dsfraud/error.hpp"
#include "dsfraud/scoring.hpp"

namespace dsfraud::io {

using json = nlohmann::json;

inline constexpr std::string_view kHistoryHeader = "txn_id,label,rule_id";
inline constexpr std::string_view kModelFormat = "dsfraud-bayes-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline Error parse_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

inline void strip_line_ending(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// RFC 4180 style: fields may be double-quoted, "" escapes a quote.
inline std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == ',') {
      fields.emplace_back();
      was_quoted = false;
    } else if (c == '"' && fields.back().empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw parse_error(line_no, "unterminated quoted field");
  return fields;
}

inline std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string shortest(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string fixed4(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

template <typename T>
T get_field(const json& object, std::string_view key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorCode::ParseError, where + ": missing field '" + std::string(key) + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ParseError, where + ": field '" + std::string(key) + "' has the wrong type");
  }
}

inline double get_number(const json& object, std::string_view key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) throw Error(ErrorCode::ParseError, where + ": missing field '" + std::string(key) + "'");
  if (!it->is_number()) throw Error(ErrorCode::ParseError, where + ": field '" + std::string(key) + "' must be a number");
  return it->get<double>();
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return in;
}

inline json parse_json_document(std::istream& in, const std::string& what) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Labeled history

/// Reads `txn_id,label,rule_id` rows (one per trigger; untriggered
/// transactions appear once with an empty rule_id) into class and trigger
/// counts. Error messages name the offending line.
inline LabeledHistory read_history_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw detail::parse_error(1, "empty file, expected header '" + std::string(kHistoryHeader) + "'");
  detail::strip_line_ending(line);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (line != kHistoryHeader) {
    throw detail::parse_error(1, "expected header '" + std::string(kHistoryHeader) + "', got '" + line + "'");
  }

  struct Seen {
    bool fraud;
    std::set<std::string> rules;
  };
  std::map<std::string, Seen> transactions;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_line_ending(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line, line_no);
    if (fields.size() != 3) {
      throw detail::parse_error(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    const std::string& txn = fields[0];
    const std::string& label = fields[1];
    const std::string& rule = fields[2];
    if (txn.empty()) throw detail::parse_error(line_no, "empty txn_id");
    if (label != kFraud && label != kGenuine) {
      throw detail::parse_error(line_no, "label must be 'fraud' or 'genuine', got '" + label + "'");
    }
    const bool fraud = label == kFraud;
    auto [it, inserted] = transactions.try_emplace(txn, Seen{fraud, {}});
    if (!inserted && it->second.fraud != fraud) {
      throw detail::parse_error(line_no, "transaction '" + txn + "' has conflicting labels");
    }
    if (!rule.empty() && !it->second.rules.insert(rule).second) {
      throw detail::parse_error(line_no, "rule '" + rule + "' listed twice for transaction '" + txn + "'");
    }
  }

  LabeledHistory history;
  history.total = transactions.size();
  for (const auto& [txn, seen] : transactions) {
    if (seen.fraud) ++history.fraud_count;
    for (const auto& rule : seen.rules) {
      auto& counts = history.evidence[rule];
      (seen.fraud ? counts.triggered_fraud : counts.triggered_genuine) += 1;
    }
  }
  return history;
}

inline LabeledHistory read_history_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_history_csv(in);
}

// ---------------------------------------------------------------------------
// Bayes model

inline json model_to_json(const BayesModel& model) {
  json likelihoods = json::object();
  for (const auto& [id, l] : model.likelihoods) {
    likelihoods[id] = {{"p_given_fraud", l.given_fraud}, {"p_given_genuine", l.given_genuine}};
  }
  return {{"format", kModelFormat},
          {"version", kModelVersion},
          {"prior_fraud", model.prior_fraud},
          {"prior_genuine", model.prior_genuine},
          {"smoothing", model.smoothing},
          {"likelihoods", std::move(likelihoods)}};
}

inline BayesModel model_from_json(const json& doc) {
  const std::string where = "model";
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "model must be a JSON object");
  if (detail::get_field<std::string>(doc, "format", where) != kModelFormat) {
    throw Error(ErrorCode::ParseError, "model: unexpected format tag");
  }
  if (detail::get_field<int>(doc, "version", where) != kModelVersion) {
    throw Error(ErrorCode::ParseError, "model: unsupported version");
  }
  BayesModel model;
  model.prior_fraud = detail::get_number(doc, "prior_fraud", where);
  model.prior_genuine = detail::get_number(doc, "prior_genuine", where);
  model.smoothing = detail::get_number(doc, "smoothing", where);
  if (!(model.prior_fraud >= 0.0 && model.prior_genuine >= 0.0) ||
      std::abs(model.prior_fraud + model.prior_genuine - 1.0) > 1e-12) {
    throw Error(ErrorCode::ParseError, "model: priors must be non-negative and sum to 1");
  }
  const auto likelihoods = doc.find("likelihoods");
  if (likelihoods == doc.end() || !likelihoods->is_object()) {
    throw Error(ErrorCode::ParseError, "model: 'likelihoods' must be an object");
  }
  for (const auto& [id, entry] : likelihoods->items()) {
    const std::string at = "model: likelihood '" + id + "'";
    if (!entry.is_object()) throw Error(ErrorCode::ParseError, at + " must be an object");
    Likelihood l{detail::get_number(entry, "p_given_fraud", at), detail::get_number(entry, "p_given_genuine", at)};
    if (!(l.given_fraud >= 0.0 && l.given_fraud <= 1.0 && l.given_genuine >= 0.0 && l.given_genuine <= 1.0)) {
      throw Error(ErrorCode::ParseError, at + ": likelihoods must lie in [0,1]");
    }
    model.likelihoods.emplace(id, l);
  }
  return model;
}

inline void save_model(const BayesModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

inline BayesModel load_model(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return model_from_json(detail::parse_json_document(in, path.string()));
}

// ---------------------------------------------------------------------------
// Rule configuration

struct RuleConfig {
  std::string combiner = "ds-standard";  // ds-standard | ds-paper | bayes
  double threshold = 0.5;
  std::optional<std::filesystem::path> model_path;
  std::vector<RuleSpec> rules;
};

inline RuleSpec rule_from_json(const json& entry, std::size_t index) {
  std::string where = "rules[" + std::to_string(index) + "]";
  if (!entry.is_object()) throw Error(ErrorCode::ParseError, where + " must be an object");
  RuleSpec rule;
  rule.id = detail::get_field<std::string>(entry, "id", where);
  where = "rule '" + rule.id + "'";
  if (auto d = entry.find("description"); d != entry.end()) {
    if (!d->is_string()) throw Error(ErrorCode::ParseError, where + ": field 'description' must be a string");
    rule.description = d->get<std::string>();
  }

  const bool scored = entry.contains("score");
  const bool explicit_mass = entry.contains("m_fraud") || entry.contains("m_genuine") || entry.contains("m_uncertain");
  if (scored == explicit_mass) {
    throw Error(ErrorCode::ParseError, where + ": give either 'score' (+ 'uncertainty') or 'm_fraud'/'m_genuine'/'m_uncertain'");
  }
  auto optional_number = [&](std::string_view key) {
    return entry.contains(key) ? detail::get_number(entry, key, where) : 0.0;
  };
  if (scored) {
    rule.mass = ScoredMass{detail::get_number(entry, "score", where), optional_number("uncertainty")};
  } else {
    rule.mass = ExplicitMass{detail::get_number(entry, "m_fraud", where), detail::get_number(entry, "m_genuine", where),
                             optional_number("m_uncertain")};
  }
  try {
    rule.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return rule;
}

/// Relative model paths resolve against `base_dir`.
inline RuleConfig rule_config_from_json(const json& doc, const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  const std::string where = "config";
  RuleConfig config;
  if (auto frame = doc.find("frame"); frame != doc.end()) {
    const json expected = {kFraud, kGenuine};
    if (*frame != expected) throw Error(ErrorCode::ParseError, "config: field 'frame' must be [\"fraud\", \"genuine\"]");
  }
  config.combiner = detail::get_field<std::string>(doc, "combiner", where);
  if (config.combiner != "ds-standard" && config.combiner != "ds-paper" && config.combiner != "bayes") {
    throw Error(ErrorCode::ParseError, "config: field 'combiner' must be ds-standard, ds-paper or bayes");
  }
  config.threshold = detail::get_number(doc, "threshold", where);
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw Error(ErrorCode::ParseError, "config: field 'threshold' must lie in [0,1]");
  }
  if (doc.contains("model")) {
    std::filesystem::path model = detail::get_field<std::string>(doc, "model", where);
    config.model_path = model.is_absolute() ? model : base_dir / model;
  }
  const auto rules = doc.find("rules");
  if (rules == doc.end() || !rules->is_array()) throw Error(ErrorCode::ParseError, "config: 'rules' must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < rules->size(); ++i) {
    auto rule = rule_from_json((*rules)[i], i);
    if (!ids.insert(rule.id).second) throw Error(ErrorCode::ParseError, "config: duplicate rule id '" + rule.id + "'");
    config.rules.push_back(std::move(rule));
  }
  return config;
}

inline RuleConfig load_rule_config(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return rule_config_from_json(detail::parse_json_document(in, path.string()), path.parent_path());
}

// ---------------------------------------------------------------------------
// Transaction batches

/// One JSON object per line: {"id", "triggered", "payload"?}. Fields other
/// than these are merged into the payload object.
inline std::vector<Transaction> read_batch_jsonl(std::istream& in) {
  std::vector<Transaction> batch;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_line_ending(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw detail::parse_error(line_no, e.what());
    }
    if (!record.is_object()) throw detail::parse_error(line_no, "record must be a JSON object");

    Transaction txn;
    auto id = record.find("id");
    if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw detail::parse_error(line_no, "field 'id' must be a non-empty string");
    }
    txn.id = id->get<std::string>();
    if (!ids.insert(txn.id).second) throw detail::parse_error(line_no, "duplicate transaction id '" + txn.id + "'");

    auto triggered = record.find("triggered");
    if (triggered == record.end() || !triggered->is_array()) {
      throw detail::parse_error(line_no, "field 'triggered' must be an array of rule ids");
    }
    for (const auto& rule : *triggered) {
      if (!rule.is_string()) throw detail::parse_error(line_no, "field 'triggered' must contain only strings");
      txn.triggered.push_back(rule.get<std::string>());
    }

    std::optional<json> payload;
    if (auto p = record.find("payload"); p != record.end()) payload = *p;
    for (const auto& [key, value] : record.items()) {
      if (key == "id" || key == "triggered" || key == "payload") continue;
      if (!payload) payload = json::object();
      if (!payload->is_object()) {
        throw detail::parse_error(line_no, "extra field '" + key + "' cannot be merged into a non-object payload");
      }
      (*payload)[key] = value;
    }
    if (payload) txn.payload = payload->dump();
    batch.push_back(std::move(txn));
  }
  return batch;
}

inline std::vector<Transaction> read_batch_jsonl(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_batch_jsonl(in);
}

// ---------------------------------------------------------------------------
// Score reports

enum class ReportFormat { Table, Csv, Jsonl };

inline std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "table") return ReportFormat::Table;
  if (text == "csv") return ReportFormat::Csv;
  if (text == "jsonl") return ReportFormat::Jsonl;
  return std::nullopt;
}

struct ReportHeader {
  std::string combiner;
  double threshold;
};

namespace detail {

inline std::string_view status_of(const Unscored& u) {
  return u.reason == Unscored::Reason::Skipped ? "skipped" : "error";
}

inline void write_table(std::ostream& out, const BatchResult& result, const ReportHeader& header) {
  out << "# combiner: " << header.combiner << ", threshold: " << fixed4(header.threshold) << '\n';
  std::size_t id_width = 2;
  for (const auto& r : result.ranked) id_width = std::max(id_width, r.transaction_id.size());
  for (const auto& u : result.unscored) id_width = std::max(id_width, u.transaction_id.size());

  out << std::left << std::setw(5) << "rank" << ' ' << std::setw(static_cast<int>(id_width)) << "id" << std::right
      << std::setw(10) << "bel_fraud" << std::setw(10) << "pl_fraud" << std::setw(10) << "point" << std::setw(10)
      << "conflict" << std::setw(10) << "sources" << "  flags\n";
  for (const auto& r : result.ranked) {
    std::string flags = r.flags.confirmed ? "confirmed" : (r.flags.suspicious ? "suspicious" : "-");
    out << std::left << std::setw(5) << r.rank << ' ' << std::setw(static_cast<int>(id_width)) << r.transaction_id
        << std::right << std::setw(10) << fixed4(r.bel_fraud) << std::setw(10) << fixed4(r.pl_fraud) << std::setw(10)
        << fixed4(r.point_estimate) << std::setw(10) << fixed4(r.conflict) << std::setw(10) << r.n_sources << "  "
        << flags << '\n';
  }
  for (const auto& u : result.unscored) {
    out << std::left << std::setw(5) << "-" << ' ' << std::setw(static_cast<int>(id_width)) << u.transaction_id << "  "
        << status_of(u);
    if (!u.error.empty()) out << ' ' << u.error;
    out << '\n';
  }
  out << std::right;
}

inline void write_csv(std::ostream& out, const BatchResult& result, const ReportHeader& header) {
  out << "# combiner=" << header.combiner << ",threshold=" << shortest(header.threshold) << '\n';
  out << "rank,id,bel_fraud,pl_fraud,point_estimate,conflict,n_sources,suspicious,confirmed,status,error,payload\n";
  for (const auto& r : result.ranked) {
    out << r.rank << ',' << csv_field(r.transaction_id) << ',' << shortest(r.bel_fraud) << ',' << shortest(r.pl_fraud)
        << ',' << shortest(r.point_estimate) << ',' << shortest(r.conflict) << ',' << r.n_sources << ','
        << (r.flags.suspicious ? "true" : "false") << ',' << (r.flags.confirmed ? "true" : "false") << ",ok,,"
        << csv_field(r.payload) << '\n';
  }
  for (const auto& u : result.unscored) {
    out << ',' << csv_field(u.transaction_id) << ",,,,,,,," << status_of(u) << ',' << u.error << ','
        << csv_field(u.payload) << '\n';
  }
}

inline void write_jsonl(std::ostream& out, const BatchResult& result, const ReportHeader& header) {
  out << json{{"header", {{"combiner", header.combiner}, {"threshold", header.threshold}}}}.dump() << '\n';
  auto payload_json = [](const std::string& payload) { return payload.empty() ? json() : json::parse(payload); };
  for (const auto& r : result.ranked) {
    json record = {{"rank", r.rank},
                   {"id", r.transaction_id},
                   {"bel_fraud", r.bel_fraud},
                   {"pl_fraud", r.pl_fraud},
                   {"point_estimate", r.point_estimate},
                   {"conflict", r.conflict},
                   {"n_sources", r.n_sources},
                   {"suspicious", r.flags.suspicious},
                   {"confirmed", r.flags.confirmed},
                   {"status", "ok"}};
    if (!r.payload.empty()) record["payload"] = payload_json(r.payload);
    out << record.dump() << '\n';
  }
  for (const auto& u : result.unscored) {
    json record = {{"rank", nullptr}, {"id", u.transaction_id}, {"status", status_of(u)}};
    if (!u.error.empty()) {
      record["error"] = u.error;
      record["message"] = u.message;
    }
    if (!u.payload.empty()) record["payload"] = payload_json(u.payload);
    out << record.dump() << '\n';
  }
}

}  // namespace detail

/// Ranked reports first, then skipped and failed records in input order.
inline void write_reports(std::ostream& out, const BatchResult& result, const ReportHeader& header,
                          ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: detail::write_table(out, result, header); break;
    case ReportFormat::Csv: detail::write_csv(out, result, header); break;
    case ReportFormat::Jsonl: detail::write_jsonl(out, result, header); break;
  }
}

}  // namespace dsfraud::io

// fuseid/eval.hpp

// Copyright 2026  The Fuseid Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Accuracy metrics, confusion matrices and cross-condition comparison.
//
// Condition names used by the pipeline:
//   voice_only_baseline  classifier trained on raw voice embeddings
//   fused_aided          fused features with the face modality present
//   fused_masked         fused features with the face input zeroed
//
// top1 is computed from the integer trace of the confusion matrix, divided
// once at the end, so the trace/total identity holds exactly. JSON output
// uses nlohmann's default key ordering (sorted), so identical results
// serialize to identical bytes.

#ifndef FUSEID_EVAL_HPP_
#define FUSEID_EVAL_HPP_

#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fuseid/common.hpp"

namespace fuseid {

inline constexpr const char* kBaselineCondition = "voice_only_baseline";
inline constexpr const char* kAidedCondition = "fused_aided";
inline constexpr const char* kMaskedCondition = "fused_masked";

inline double top1_accuracy(std::span<const int> predictions,
                            std::span<const int> truths) {
  if (predictions.size() != truths.size())
    throw Error(ErrorCode::kMismatch,
                Msg() << "prediction count " << predictions.size()
                      << " != truth count " << truths.size());
  if (predictions.empty())
    throw Error(ErrorCode::kEmpty, "no samples to score");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == truths[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

// Rows are true classes, columns predictions.
inline std::vector<std::vector<std::size_t>> confusion_matrix(
    std::span<const int> predictions, std::span<const int> truths,
    std::size_t num_classes) {
  if (predictions.size() != truths.size())
    throw Error(ErrorCode::kMismatch,
                Msg() << "prediction count " << predictions.size()
                      << " != truth count " << truths.size());
  std::vector<std::vector<std::size_t>> matrix(
      num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    int t = truths[i];
    int p = predictions[i];
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes || p < 0 ||
        static_cast<std::size_t>(p) >= num_classes)
      throw Error(ErrorCode::kValidation,
                  Msg() << "class out of range at sample " << i << ": true "
                        << t << ", predicted " << p);
    ++matrix[t][p];
  }
  return matrix;
}

// One condition's scores over a test set. Classes with no test samples are
// simply absent from per_class_accuracy.
struct EvalReport {
  std::string condition;
  double top1 = 0.0;
  std::vector<std::pair<std::size_t, double>> per_class_accuracy;  // sorted by class
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t n_samples = 0;

  std::size_t num_classes() const { return confusion.size(); }
};

inline EvalReport evaluate(const std::string& condition,
                           std::span<const int> predictions,
                           std::span<const int> truths,
                           std::size_t num_classes) {
  EvalReport report;
  report.condition = condition;
  report.n_samples = predictions.size();
  report.confusion = confusion_matrix(predictions, truths, num_classes);
  if (predictions.empty())
    throw Error(ErrorCode::kEmpty, "no samples to score");
  std::size_t trace = 0;
  for (std::size_t cls = 0; cls < num_classes; ++cls) {
    trace += report.confusion[cls][cls];
    std::size_t row_total = 0;
    for (std::size_t p = 0; p < num_classes; ++p)
      row_total += report.confusion[cls][p];
    if (row_total > 0)
      report.per_class_accuracy.emplace_back(
          cls, static_cast<double>(report.confusion[cls][cls]) /
                   static_cast<double>(row_total));
  }
  report.top1 = static_cast<double>(trace) / static_cast<double>(report.n_samples);
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["condition"] = report.condition;
  j["n_samples"] = report.n_samples;
  j["num_classes"] = report.num_classes();
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [cls, acc] : report.per_class_accuracy) {
    std::ostringstream key;
    key << std::setw(5) << std::setfill('0') << cls;
    per_class[key.str()] = acc;
  }
  j["per_class_accuracy"] = std::move(per_class);
  j["top1"] = report.top1;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  std::size_t num_classes = 0;
  try {
    report.condition = j.at("condition").get<std::string>();
    report.n_samples = j.at("n_samples").get<std::size_t>();
    num_classes = j.at("num_classes").get<std::size_t>();
    for (const auto& [key, value] : j.at("per_class_accuracy").items())
      report.per_class_accuracy.emplace_back(std::stoul(key),
                                             value.get<double>());
    report.top1 = j.at("top1").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad report: " << e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kFormat, Msg() << "bad report key: " << e.what());
  }
  // The confusion matrix lives in its own CSV; only its width travels here.
  report.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  return report;
}

inline void write_report_json(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kIo, Msg() << "cannot open for writing: " << path);
  out << report_to_json(report).dump(2) << '\n';
  out.close();
  if (!out) throw Error(ErrorCode::kIo, Msg() << "write failed: " << path);
}

inline EvalReport read_report_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kIo, Msg() << "cannot open for reading: " << path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                Msg() << "bad report " << path << ": " << e.what());
  }
  return report_from_json(j);
}

inline void write_confusion_csv(const std::vector<std::vector<std::size_t>>& matrix,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kIo, Msg() << "cannot open for writing: " << path);
  out << "true_class";
  for (std::size_t p = 0; p < matrix.size(); ++p) out << ",pred_" << p;
  out << '\n';
  for (std::size_t t = 0; t < matrix.size(); ++t) {
    out << t;
    for (std::size_t p = 0; p < matrix[t].size(); ++p) out << ',' << matrix[t][p];
    out << '\n';
  }
  out.close();
  if (!out) throw Error(ErrorCode::kIo, Msg() << "write failed: " << path);
}

// --- Cross-condition comparison ---------------------------------------------

struct ComparisonRow {
  std::string condition;
  double top1 = 0.0;
  std::size_t n_samples = 0;
  bool has_delta = false;
  double delta = 0.0;  // top1 minus the baseline's top1
};

struct Comparison {
  std::vector<ComparisonRow> rows;
};

// Reports must describe the same test set: equal sample counts and class
// counts. Deltas are relative to voice_only_baseline when it is present.
inline Comparison compare_conditions(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::kEmpty, "no reports to compare");
  if (reports.size() < 2)
    throw Error(ErrorCode::kValidation, "need at least 2 reports to compare");
  for (const EvalReport& r : reports) {
    if (r.n_samples != reports[0].n_samples)
      throw Error(ErrorCode::kMismatch,
                  Msg() << "condition " << r.condition << " has "
                        << r.n_samples << " samples, expected "
                        << reports[0].n_samples);
    if (r.num_classes() != reports[0].num_classes())
      throw Error(ErrorCode::kMismatch,
                  Msg() << "condition " << r.condition << " has "
                        << r.num_classes() << " classes, expected "
                        << reports[0].num_classes());
  }
  const EvalReport* baseline = nullptr;
  for (const EvalReport& r : reports)
    if (r.condition == kBaselineCondition) baseline = &r;
  Comparison comparison;
  for (const EvalReport& r : reports) {
    ComparisonRow row;
    row.condition = r.condition;
    row.top1 = r.top1;
    row.n_samples = r.n_samples;
    if (baseline != nullptr && r.condition != kBaselineCondition) {
      row.has_delta = true;
      row.delta = r.top1 - baseline->top1;
    }
    comparison.rows.push_back(std::move(row));
  }
  return comparison;
}

inline nlohmann::json comparison_to_json(const Comparison& comparison) {
  nlohmann::json j;
  nlohmann::json conditions = nlohmann::json::array();
  nlohmann::json deltas = nlohmann::json::object();
  for (const ComparisonRow& row : comparison.rows) {
    conditions.push_back({{"condition", row.condition},
                          {"n_samples", row.n_samples},
                          {"top1", row.top1}});
    if (row.has_delta) deltas[row.condition] = row.delta;
  }
  j["conditions"] = std::move(conditions);
  j["deltas"] = std::move(deltas);
  return j;
}

inline void write_comparison_json(const Comparison& comparison,
                                  const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error(ErrorCode::kIo, Msg() << "cannot open for writing: " << path);
  out << comparison_to_json(comparison).dump(2) << '\n';
  out.close();
  if (!out) throw Error(ErrorCode::kIo, Msg() << "write failed: " << path);
}

// Fixed-width text table for terminal output.
inline std::string render_comparison(const Comparison& comparison) {
  std::ostringstream out;
  out << std::left << std::setw(22) << "condition" << std::right
      << std::setw(10) << "top1" << std::setw(12) << "delta" << std::setw(10)
      << "samples" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const ComparisonRow& row : comparison.rows) {
    out << std::left << std::setw(22) << row.condition << std::right
        << std::setw(10) << row.top1;
    if (row.has_delta) {
      std::ostringstream delta;
      delta << std::fixed << std::setprecision(4) << std::showpos << row.delta;
      out << std::setw(12) << delta.str();
    } else {
      out << std::setw(12) << "-";
    }
    out << std::setw(10) << row.n_samples << '\n';
  }
  return out.str();
}

}  // namespace fuseid

#endif  // FUSEID_EVAL_HPP_

// Copyright 2026 The embinvert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBINVERT_REPORT_H_
#define EMBINVERT_REPORT_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace embinvert::report {

struct ReportRow {
  std::string experiment;
  std::string dataset;
  std::string target_model;
  std::string attack_size;
  std::string factor;
  std::string metric;
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_trials = 0;
  // "*" when this row is the best of its group and the advantage is
  // significant; empty otherwise.
  std::string significance;
  // Per-trial values; used for significance tests, not serialized.
  std::vector<double> trials;

  bool operator==(const ReportRow&) const = default;
};

// Fixed column order of every CSV this library writes.
const std::vector<std::string>& csv_columns();

// Six decimals, "-0.000000" folded to "0.000000".
std::string format_value(double v);

std::string to_csv(const std::vector<ReportRow>& rows);
// Narrow tables of the per-model evaluation commands:
//   target_model,attack_size,dataset,metric,mean,stderr,n_trials,significance
//   similarity_model,attack_size,attribute,accuracy,stderr,n_trials,significance
// The attribute table reads the proxy label from a "proxy=" factor and falls
// back to target_model.
std::string to_reconstruction_csv(const std::vector<ReportRow>& rows);
std::string to_attribute_csv(const std::vector<ReportRow>& rows);

std::string to_json(const std::vector<ReportRow>& rows);
// Inverse of to_csv. Throws kCorruptFile on a malformed table.
std::vector<ReportRow> parse_csv(const std::string& text);

enum Format : unsigned {
  kCsv = 1,
  kJson = 2,
  kPlots = 4,
};

struct EmittedFiles {
  std::vector<std::filesystem::path> paths;
};

// Writes out_dir/reports/<name>.csv (always), reports/<name>.json and
// plots/<name>.<curve>.dat for the similarity, few-shot and length curves.
// Throws kIoFailure.
EmittedFiles emit_report(const std::vector<ReportRow>& rows,
                         const std::filesystem::path& out_dir,
                         const std::string& name,
                         unsigned formats = kCsv | kJson | kPlots);

// Fixed-width text table for terminals.
std::string to_table(const std::vector<ReportRow>& rows);

}  // namespace embinvert::report

#endif  // EMBINVERT_REPORT_H_

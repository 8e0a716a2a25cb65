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

#include "embinvert/report.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embinvert/binary_io.h"
#include "embinvert/error.h"

namespace embinvert::report {
namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kCorruptFile, "unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kCorruptFile, "bad number in report: " + s);
  }
}

// "train_size=1000" -> "1000"; anything else unchanged.
std::string factor_value(const std::string& factor) {
  auto eq = factor.find('=');
  return eq == std::string::npos ? factor : factor.substr(eq + 1);
}

void write_dat(const std::filesystem::path& path, const std::string& body,
               EmittedFiles& files) {
  write_text_file(path, body);
  files.paths.push_back(path);
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "dataset", "target_model", "attack_size", "factor",
      "metric",     "mean",    "stderr",       "n_trials",    "significance"};
  return cols;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out += (i ? "," : "") + cols[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    out += quote(r.experiment) + ',' + quote(r.dataset) + ',' +
           quote(r.target_model) + ',' + quote(r.attack_size) + ',' +
           quote(r.factor) + ',' + quote(r.metric) + ',' +
           format_value(r.mean) + ',' + format_value(r.std_error) + ',' +
           std::to_string(r.n_trials) + ',' + quote(r.significance) + '\n';
  }
  return out;
}

std::string to_reconstruction_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "target_model,attack_size,dataset,metric,mean,stderr,n_trials,"
      "significance\n";
  for (const auto& r : rows) {
    out += quote(r.target_model) + ',' + quote(r.attack_size) + ',' +
           quote(r.dataset) + ',' + quote(r.metric) + ',' +
           format_value(r.mean) + ',' + format_value(r.std_error) + ',' +
           std::to_string(r.n_trials) + ',' + quote(r.significance) + '\n';
  }
  return out;
}

std::string to_attribute_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "similarity_model,attack_size,attribute,accuracy,stderr,n_trials,"
      "significance\n";
  for (const auto& r : rows) {
    std::string model = r.target_model;
    if (r.factor.rfind("proxy=", 0) == 0) model = r.factor.substr(6);
    out += quote(model) + ',' + quote(r.attack_size) + ',' + quote(r.dataset) +
           ',' + format_value(r.mean) + ',' + format_value(r.std_error) + ',' +
           std::to_string(r.n_trials) + ',' + quote(r.significance) + '\n';
  }
  return out;
}

std::string to_json(const std::vector<ReportRow>& rows) {
  // Values go through the same six-decimal rendering as the CSV.
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["dataset"] = r.dataset;
    j["target_model"] = r.target_model;
    j["attack_size"] = r.attack_size;
    j["factor"] = r.factor;
    j["metric"] = r.metric;
    j["mean"] = std::stod(format_value(r.mean));
    j["stderr"] = std::stod(format_value(r.std_error));
    j["n_trials"] = r.n_trials;
    j["significance"] = r.significance;
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kCorruptFile, "empty report");
  }
  if (split_record(line) != csv_columns()) {
    throw Error(ErrorCode::kCorruptFile, "unexpected report header");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_record(line);
    if (f.size() != csv_columns().size()) {
      throw Error(ErrorCode::kCorruptFile, "wrong field count: " + line);
    }
    ReportRow r;
    r.experiment = f[0];
    r.dataset = f[1];
    r.target_model = f[2];
    r.attack_size = f[3];
    r.factor = f[4];
    r.metric = f[5];
    r.mean = parse_number(f[6]);
    r.std_error = parse_number(f[7]);
    r.n_trials = static_cast<std::size_t>(parse_number(f[8]));
    r.significance = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

EmittedFiles emit_report(const std::vector<ReportRow>& rows,
                         const std::filesystem::path& out_dir,
                         const std::string& name, unsigned formats) {
  EmittedFiles files;
  const auto reports = out_dir / "reports";
  auto csv = reports / (name + ".csv");
  write_text_file(csv, to_csv(rows));
  files.paths.push_back(csv);
  if (formats & kJson) {
    auto json = reports / (name + ".json");
    write_text_file(json, to_json(rows));
    files.paths.push_back(json);
  }
  if (!(formats & kPlots)) return files;

  const auto plots = out_dir / "plots";
  // Similarity vs beam BLEU-1, one line per OOD dataset.
  {
    std::map<std::string, std::pair<std::string, std::string>> by_key;
    std::vector<std::string> order;
    for (const auto& r : rows) {
      if (r.experiment != "ood") continue;
      std::string key = r.target_model + ' ' + r.attack_size + ' ' + r.dataset;
      if (!by_key.count(key)) order.push_back(key);
      auto& slot = by_key[key];
      if (r.metric == "similarity") slot.first = format_value(r.mean);
      if (r.metric == "bleu1_beam") slot.second = format_value(r.mean);
    }
    if (!order.empty()) {
      std::string body = "# target attack dataset similarity bleu1\n";
      for (const auto& key : order) {
        const auto& [sim, bleu] = by_key[key];
        if (sim.empty() || bleu.empty()) continue;
        body += key + ' ' + sim + ' ' + bleu + '\n';
      }
      write_dat(plots / (name + ".similarity.dat"), body, files);
    }
  }
  // Factor level vs sampled BLEU-1 with its standard error.
  for (const char* exp : {"few_shot", "length"}) {
    std::string body;
    for (const auto& r : rows) {
      if (r.experiment != exp || r.metric != "bleu1_sampled") continue;
      body += r.target_model + ' ' + r.attack_size + ' ' + r.dataset + ' ' +
              factor_value(r.factor) + ' ' + format_value(r.mean) + ' ' +
              format_value(r.std_error) + '\n';
    }
    if (body.empty()) continue;
    body = "# target attack dataset level bleu1 stderr\n" + body;
    write_dat(plots / (name + "." + exp + ".dat"), body, files);
  }
  return files;
}

std::string to_table(const std::vector<ReportRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(csv_columns());
  for (const auto& r : rows) {
    cells.push_back({r.experiment, r.dataset, r.target_model, r.attack_size,
                     r.factor, r.metric, format_value(r.mean),
                     format_value(r.std_error), std::to_string(r.n_trials),
                     r.significance});
  }
  std::vector<std::size_t> width(csv_columns().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      width[i] = std::max(width[i], row[i].size());
    }
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += row[i];
      if (i + 1 < row.size()) out += std::string(width[i] - row[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

}  // namespace embinvert::report

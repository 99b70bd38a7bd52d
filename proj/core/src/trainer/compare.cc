// core/src/trainer/compare.cc

// Copyright 2026 The vpc Authors.

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

#include "vpc/trainer/compare.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace vpc {

namespace {

// Encoder shape without the fields that legitimately differ between runs.
nlohmann::json Shape(const nlohmann::json& enc) {
  nlohmann::json s = enc;
  s.erase("causal");
  s.erase("dropout");
  return s;
}

}  // namespace

ComparisonReport CompareRuns(const std::vector<RunRecord>& runs) {
  ComparisonReport rep;
  if (runs.empty()) return rep;
  for (const RunRecord& r : runs) {
    if (r.corpus_fingerprint != runs[0].corpus_fingerprint) {
      throw std::invalid_argument("runs " + runs[0].run_dir.string() + " and " +
                                  r.run_dir.string() + " were trained on different corpora");
    }
    if (Shape(r.encoder_config) != Shape(runs[0].encoder_config)) {
      throw std::invalid_argument("runs use different encoder configurations");
    }
    rep.rows.push_back({r.label, r.seed, r.final_neg_elbo, r.first_total, r.run_dir.string()});
    auto it = std::find_if(rep.labels.begin(), rep.labels.end(),
                           [&](const LabelSummary& s) { return s.label == r.label; });
    if (it == rep.labels.end()) {
      rep.labels.push_back({r.label, {}, {}, 0.0, 0.0});
      it = rep.labels.end() - 1;
    }
    it->seeds.push_back(r.seed);
    it->finals.push_back(r.final_neg_elbo);
    it->mean_first += r.first_total;
  }
  for (LabelSummary& s : rep.labels) {
    double acc = 0.0;
    for (double f : s.finals) acc += f;
    s.mean_final = acc / static_cast<double>(s.finals.size());
    s.mean_first /= static_cast<double>(s.finals.size());
  }
  for (std::size_t i = 0; i < rep.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.labels.size(); ++j) {
      const LabelSummary& a = rep.labels[i];
      const LabelSummary& b = rep.labels[j];
      PairwiseOrdering p{a.label, b.label, a.mean_final - b.mean_final, {}};
      for (std::size_t x = 0; x < a.seeds.size(); ++x) {
        for (std::size_t y = 0; y < b.seeds.size(); ++y) {
          if (a.seeds[x] == b.seeds[y]) p.per_seed.emplace_back(a.seeds[x], a.finals[x] - b.finals[y]);
        }
      }
      rep.pairs.push_back(std::move(p));
    }
  }
  return rep;
}

const LabelSummary& ComparisonReport::Summary(const std::string& label) const {
  for (const auto& s : labels) {
    if (s.label == label) return s;
  }
  throw std::out_of_range("no runs labelled " + label);
}

nlohmann::json ComparisonReport::ToJson() const {
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : rows) {
    j["runs"].push_back({{"label", r.label},
                         {"seed", r.seed},
                         {"final_neg_elbo", r.final_neg_elbo},
                         {"first_total", r.first_total},
                         {"run_dir", r.run_dir}});
  }
  j["labels"] = nlohmann::json::array();
  for (const auto& s : labels) {
    j["labels"].push_back({{"label", s.label},
                           {"seeds", s.seeds},
                           {"finals", s.finals},
                           {"mean_final_neg_elbo", s.mean_final},
                           {"mean_first_total", s.mean_first}});
  }
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : pairs) {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& [seed, diff] : p.per_seed) seeds.push_back({{"seed", seed}, {"difference", diff}});
    j["pairs"].push_back({{"a", p.a},
                          {"b", p.b},
                          {"mean_difference", p.mean_difference},
                          {"a_lower", p.mean_difference < 0.0},
                          {"per_seed", seeds}});
  }
  return j;
}

std::string ComparisonReport::ToCsv() const {
  std::ostringstream out;
  out << "label,seed,final_neg_elbo,first_total,run_dir\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.label << "," << r.seed << "," << r.final_neg_elbo << "," << r.first_total << ","
        << r.run_dir << "\n";
  }
  return out.str();
}

void ComparisonReport::Write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream j(dir / "comparison.json");
  std::ofstream c(dir / "comparison.csv");
  if (!j || !c) throw std::runtime_error("cannot write comparison report in " + dir.string());
  j << ToJson().dump(2) << "\n";
  c << ToCsv();
}

}  // namespace vpc

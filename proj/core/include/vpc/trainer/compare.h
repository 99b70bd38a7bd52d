// core/include/vpc/trainer/compare.h

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

#ifndef VPC_TRAINER_COMPARE_H_
#define VPC_TRAINER_COMPARE_H_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vpc/trainer/trainer.h"

namespace vpc {

struct ComparisonRow {
  std::string label;
  std::uint64_t seed = 0;
  double final_neg_elbo = 0.0;
  double first_total = 0.0;
  std::string run_dir;
};

struct LabelSummary {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::vector<double> finals;  // per seed, same order as seeds
  double mean_final = 0.0;
  double mean_first = 0.0;
};

struct PairwiseOrdering {
  std::string a, b;
  double mean_difference = 0.0;  // mean_final(a) - mean_final(b)
  // Per shared seed: final(a) - final(b).
  std::vector<std::pair<std::uint64_t, double>> per_seed;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // one per run, input order
  std::vector<LabelSummary> labels; // first-appearance order
  std::vector<PairwiseOrdering> pairs;

  nlohmann::json ToJson() const;
  std::string ToCsv() const;
  void Write(const std::filesystem::path& dir) const;  // comparison.{json,csv}
  const LabelSummary& Summary(const std::string& label) const;
};

// Throws std::invalid_argument when runs were trained on different corpora
// or with different encoder shapes.
ComparisonReport CompareRuns(const std::vector<RunRecord>& runs);

}  // namespace vpc

#endif  // VPC_TRAINER_COMPARE_H_

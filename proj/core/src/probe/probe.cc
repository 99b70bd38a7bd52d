// core/src/probe/probe.cc

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

#include "vpc/probe/probe.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vpc/features/feature_cache.h"
#include "vpc/numerics/parameters.h"
#include "vpc/numerics/rng.h"
#include "vpc/numerics/tape.h"

namespace vpc {

namespace fs = std::filesystem;

std::string ToString(ProbeTask t) {
  return t == ProbeTask::kClassify ? "frame_classify" : "frame_regress";
}

ProbeTask ParseProbeTask(const std::string& s) {
  if (s == "frame_classify" || s == "classify") return ProbeTask::kClassify;
  if (s == "frame_regress" || s == "regress") return ProbeTask::kRegress;
  throw std::invalid_argument("unknown probe task '" + s + "'");
}

void ProbeConfig::Validate() const {
  if (layer < -1) throw std::invalid_argument("probe layer must be >= 0 or -1 for all");
  if (!(lr > 0.0)) throw std::invalid_argument("probe lr must be > 0");
  if (epochs < 0) throw std::invalid_argument("probe epochs must be >= 0");
  if (batch_frames < 1) throw std::invalid_argument("probe batch_frames must be >= 1");
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw std::invalid_argument("probe heldout_fraction must be in (0, 1)");
  }
}

nlohmann::json ProbeConfig::ToJson() const {
  return {{"task", ToString(task)},     {"layer", layer},
          {"lr", lr},                   {"epochs", epochs},
          {"batch_frames", batch_frames}, {"heldout_fraction", heldout_fraction},
          {"seed", seed}};
}

ProbeLabels ProbeLabels::FromCorpus(std::span<const LabeledSequence> corpus, int num_classes) {
  ProbeLabels out;
  out.num_classes = num_classes;
  for (const LabeledSequence& s : corpus) {
    out.classes.push_back(s.states);
    out.values.push_back(s.aux);
  }
  return out;
}

std::vector<Matrix> ExtractAllLayers(const Model& model, const Matrix& raw_frames) {
  num::Tape tape;
  auto& params = const_cast<num::ParameterStore&>(model.params);
  const num::BoundParams bound(tape, params);
  const EncoderOutput out = Encode(model.encoder, bound,
                                   tape.Constant(Normalize(raw_frames, model.input_stats)), {});
  std::vector<Matrix> layers;
  for (const auto& v : out.layers) layers.push_back(v.value());
  return layers;
}

std::vector<Matrix> ExtractFeatures(const Model& model, std::span<const FrameSequence> corpus,
                                    int layer, const fs::path& cache_dir) {
  std::vector<Matrix> out;
  out.reserve(corpus.size());
  for (const FrameSequence& s : corpus) out.push_back(ExtractLayer(model, s.frames, layer));
  if (!cache_dir.empty()) {
    std::vector<FrameSequence> seqs;
    for (std::size_t i = 0; i < out.size(); ++i) {
      seqs.push_back({out[i], corpus[i].frame_rate_ms, corpus[i].source_id});
    }
    WriteCorpus(cache_dir, seqs);
  }
  return out;
}

std::vector<std::size_t> HeldoutSplit(std::size_t n, double fraction, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("probing needs at least two sequences");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(DeriveSeed(seed, "probe-split"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.UniformInt(i))]);
  }
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> held(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(held.begin(), held.end());
  return held;
}

namespace {

struct Split {
  Matrix x_train, x_test;
  Matrix y_train, y_test;  // one column: class index or value
};

Split Assemble(std::span<const Matrix> features, const ProbeLabels& labels, ProbeTask task,
               const std::vector<std::size_t>& held) {
  const bool classify = task == ProbeTask::kClassify;
  const std::size_t n_labels = classify ? labels.classes.size() : labels.values.size();
  if (n_labels != features.size()) {
    throw std::invalid_argument("probe has " + std::to_string(features.size()) +
                                " feature sequences but " + std::to_string(n_labels) +
                                " label sequences");
  }
  std::vector<bool> is_held(features.size(), false);
  for (std::size_t h : held) is_held[h] = true;
  Index n_train = 0, n_test = 0;
  const Index dim = features.empty() ? 0 : features[0].cols();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const std::size_t len = classify ? labels.classes[i].size() : labels.values[i].size();
    if (static_cast<Index>(len) != features[i].rows()) {
      throw std::invalid_argument("sequence " + std::to_string(i) + " has " +
                                  std::to_string(features[i].rows()) + " frames but " +
                                  std::to_string(len) + " labels");
    }
    if (features[i].cols() != dim) throw std::invalid_argument("feature dimension varies");
    (is_held[i] ? n_test : n_train) += features[i].rows();
  }
  Split s;
  s.x_train.resize(n_train, dim);
  s.x_test.resize(n_test, dim);
  s.y_train.resize(n_train, 1);
  s.y_test.resize(n_test, 1);
  Index r_train = 0, r_test = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    Matrix& x = is_held[i] ? s.x_test : s.x_train;
    Matrix& y = is_held[i] ? s.y_test : s.y_train;
    Index& r = is_held[i] ? r_test : r_train;
    for (Index t = 0; t < features[i].rows(); ++t, ++r) {
      x.row(r) = features[i].row(t);
      const auto ut = static_cast<std::size_t>(t);
      if (classify) {
        const int c = labels.classes[i][ut];
        if (c < 0 || c >= labels.num_classes) {
          throw std::invalid_argument("class label " + std::to_string(c) + " out of range");
        }
        y(r, 0) = c;
      } else {
        y(r, 0) = labels.values[i][ut];
      }
    }
  }
  return s;
}

double Evaluate(const Matrix& x, const Matrix& y, const Matrix& w, const Matrix& b, bool classify,
                double y_mean, double y_std) {
  if (x.rows() == 0) return 0.0;
  const Matrix out = (x * w).rowwise() + b.row(0);
  if (classify) {
    Index wrong = 0;
    for (Index r = 0; r < out.rows(); ++r) {
      Index arg = 0;
      out.row(r).maxCoeff(&arg);
      if (arg != static_cast<Index>(y(r, 0))) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(out.rows());
  }
  const Eigen::VectorXd pred = out.col(0).array() * y_std + y_mean;
  return std::sqrt((pred - y.col(0)).squaredNorm() / static_cast<double>(out.rows()));
}

}  // namespace

LayerResult ProbeFeatures(std::span<const Matrix> features, const ProbeLabels& labels,
                          const ProbeConfig& cfg) {
  cfg.Validate();
  const bool classify = cfg.task == ProbeTask::kClassify;
  if (classify && labels.num_classes < 2) throw std::invalid_argument("need at least two classes");
  const auto held = HeldoutSplit(features.size(), cfg.heldout_fraction, cfg.seed);
  Split s = Assemble(features, labels, cfg.task, held);
  const Index dim = s.x_train.cols();
  if (s.x_train.rows() == 0) throw std::invalid_argument("probe training split is empty");

  // Standardize with training statistics.
  const Eigen::RowVectorXd mean = s.x_train.colwise().mean();
  Eigen::RowVectorXd sd =
      ((s.x_train.rowwise() - mean).array().square().colwise().sum() /
       static_cast<double>(s.x_train.rows()))
          .sqrt();
  for (Index c = 0; c < dim; ++c) {
    if (!(sd(c) > 1e-12)) sd(c) = 1.0;
  }
  auto standardize = [&](Matrix& x) { x = (x.rowwise() - mean).array().rowwise() / sd.array(); };
  standardize(s.x_train);
  standardize(s.x_test);
  double y_mean = 0.0, y_std = 1.0;
  if (!classify) {
    y_mean = s.y_train.mean();
    y_std = std::sqrt((s.y_train.array() - y_mean).square().mean());
    if (!(y_std > 1e-12)) y_std = 1.0;
  }

  const Index out_dim = classify ? labels.num_classes : 1;
  num::ParameterStore store;
  num::Parameter& w = store.Add("probe.w", Matrix::Zero(dim, out_dim));
  num::Parameter& b = store.Add("probe.b", Matrix::Zero(1, out_dim));
  num::Adam adam({cfg.lr, 0.9, 0.999, 1e-8});

  const Index n = s.x_train.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(DeriveSeed(cfg.seed, "probe-batches", static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.UniformInt(i))]);
    }
    for (Index start = 0; start < n; start += cfg.batch_frames) {
      const Index m = std::min<Index>(cfg.batch_frames, n - start);
      Matrix xb(m, dim);
      Matrix yb(m, 1);
      for (Index r = 0; r < m; ++r) {
        const Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = s.x_train.row(src);
        yb(r, 0) = s.y_train(src, 0);
      }
      Matrix delta = (xb * w.value).rowwise() + b.value.row(0);
      if (classify) {
        delta = num::LogSoftmaxRowsValue(delta).array().exp().matrix();
        for (Index r = 0; r < m; ++r) delta(r, static_cast<Index>(yb(r, 0))) -= 1.0;
      } else {
        delta.col(0) -= ((yb.col(0).array() - y_mean) / y_std).matrix();
      }
      delta /= static_cast<double>(m);
      w.grad = xb.transpose() * delta;
      b.grad = delta.colwise().sum();
      adam.Step(store);
    }
  }

  LayerResult res;
  res.error = Evaluate(s.x_test, s.y_test, w.value, b.value, classify, y_mean, y_std);
  res.train_error = Evaluate(s.x_train, s.y_train, w.value, b.value, classify, y_mean, y_std);
  res.train_frames = s.x_train.rows();
  res.heldout_frames = s.x_test.rows();
  return res;
}

ProbeReport RunProbe(const Model& model, std::span<const FrameSequence> corpus,
                     const ProbeLabels& labels, const ProbeConfig& cfg) {
  cfg.Validate();
  const int depth = model.encoder.layers;
  if (cfg.layer > depth) {
    throw std::invalid_argument("probe layer " + std::to_string(cfg.layer) + " outside [0, " +
                                std::to_string(depth) + "]");
  }
  ProbeReport rep;
  rep.task = cfg.task;
  rep.heldout_sequences = HeldoutSplit(corpus.size(), cfg.heldout_fraction, cfg.seed);

  std::vector<Matrix> raw;
  for (const FrameSequence& s : corpus) raw.push_back(s.frames);
  rep.baseline = ProbeFeatures(raw, labels, cfg);
  rep.baseline.layer = -1;

  std::vector<std::vector<Matrix>> per_layer(static_cast<std::size_t>(depth) + 1);
  for (const FrameSequence& s : corpus) {
    std::vector<Matrix> layers = ExtractAllLayers(model, s.frames);
    for (int l = 0; l <= depth; ++l) {
      per_layer[static_cast<std::size_t>(l)].push_back(std::move(layers[static_cast<std::size_t>(l)]));
    }
  }
  const int lo = cfg.layer < 0 ? 0 : cfg.layer;
  const int hi = cfg.layer < 0 ? depth : cfg.layer;
  for (int l = lo; l <= hi; ++l) {
    LayerResult r = ProbeFeatures(per_layer[static_cast<std::size_t>(l)], labels, cfg);
    r.layer = l;
    rep.layers.push_back(r);
  }
  const auto best = std::min_element(rep.layers.begin(), rep.layers.end(),
                                     [](const LayerResult& a, const LayerResult& b) {
                                       return a.error < b.error;
                                     });
  rep.best_layer = best->layer;
  rep.best_error = best->error;
  return rep;
}

nlohmann::json ProbeReport::ToJson() const {
  auto row = [](const LayerResult& r) {
    return nlohmann::json{{"layer", r.layer},
                          {"error", r.error},
                          {"train_error", r.train_error},
                          {"train_frames", r.train_frames},
                          {"heldout_frames", r.heldout_frames}};
  };
  nlohmann::json j;
  j["task"] = ToString(task);
  j["metric"] = task == ProbeTask::kClassify ? "error_rate" : "rmse";
  j["baseline"] = row(baseline);
  j["layers"] = nlohmann::json::array();
  for (const auto& r : layers) j["layers"].push_back(row(r));
  j["best_layer"] = best_layer;
  j["best_error"] = best_error;
  j["heldout_sequences"] = heldout_sequences;
  return j;
}

std::string ProbeReport::ToCsv() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "layer,error,train_error,train_frames,heldout_frames\n";
  auto row = [&](const std::string& name, const LayerResult& r) {
    out << name << "," << r.error << "," << r.train_error << "," << r.train_frames << ","
        << r.heldout_frames << "\n";
  };
  row("raw", baseline);
  for (const auto& r : layers) row(std::to_string(r.layer), r);
  return out.str();
}

void ProbeReport::Write(const fs::path& dir) const {
  fs::create_directories(dir);
  std::ofstream j(dir / "probe.json");
  std::ofstream c(dir / "probe.csv");
  if (!j || !c) throw std::runtime_error("cannot write probe report in " + dir.string());
  j << ToJson().dump(2) << "\n";
  c << ToCsv();
}

}  // namespace vpc

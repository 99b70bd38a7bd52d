// core/src/synthdata/hmm.cc

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

#include "vpc/synthdata/hmm.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "vpc/features/feature_cache.h"

namespace vpc {

namespace fs = std::filesystem;

namespace {

// Distance between state means in the default spec, tuned so that the
// frame-level Bayes error with unit emission std lands near 12%.
constexpr double kDeskMeanSpacing = 3.5;
constexpr double kAuxBase = 100.0;
constexpr double kAuxStep = 30.0;
constexpr double kAuxSmoothing = 0.5;
constexpr double kAuxNoise = 2.0;

int SampleCategorical(std::span<const double> probs, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left a sliver above the last cumulative value.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

Eigen::VectorXd StateLogLikelihoods(const HmmSpec& spec, const Matrix& frames,
                                    Index t) {
  Eigen::VectorXd ll(spec.n_states);
  const double d = spec.dim();
  for (int s = 0; s < spec.n_states; ++s) {
    const double sd = spec.emission_std[static_cast<std::size_t>(s)];
    ll(s) = -0.5 * (frames.row(t) - spec.emission_means.row(s)).squaredNorm() /
                (sd * sd) -
            d * std::log(sd);
  }
  return ll;
}

Eigen::VectorXd OccupancyPrior(const HmmSpec& spec) {
  // Cesaro average of the segment chain started uniform; durations share one
  // distribution, so segment frequencies equal frame frequencies.
  const int n = spec.n_states;
  Eigen::RowVectorXd p = Eigen::RowVectorXd::Constant(n, 1.0 / n);
  Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(n);
  const int iters = 2000;
  for (int i = 0; i < iters; ++i) {
    avg += p;
    p = p * spec.transition;
  }
  return (avg / iters).transpose();
}

}  // namespace

void HmmSpec::Validate() const {
  if (n_states < 1) throw std::invalid_argument("n_states must be >= 1");
  if (transition.rows() != n_states || transition.cols() != n_states) {
    throw std::invalid_argument("transition must be n_states x n_states");
  }
  for (int i = 0; i < n_states; ++i) {
    if ((transition.row(i).array() < 0.0).any()) {
      throw std::invalid_argument("transition entries must be non-negative");
    }
    if (std::abs(transition.row(i).sum() - 1.0) > 1e-12) {
      throw std::invalid_argument("transition row " + std::to_string(i) +
                                  " does not sum to 1");
    }
  }
  if (emission_means.rows() != n_states || emission_means.cols() < 1) {
    throw std::invalid_argument("emission_means must be n_states x d");
  }
  if (static_cast<int>(emission_std.size()) != n_states) {
    throw std::invalid_argument("need one emission std per state");
  }
  for (double sd : emission_std) {
    if (!(sd > 0.0)) throw std::invalid_argument("emission std must be > 0");
  }
  if (min_duration < 1 || max_duration < min_duration) {
    throw std::invalid_argument("infeasible duration constraints: [" +
                                std::to_string(min_duration) + ", " +
                                std::to_string(max_duration) + "]");
  }
}

nlohmann::json HmmSpec::ToJson() const {
  nlohmann::json t = nlohmann::json::array(), m = nlohmann::json::array();
  for (Index i = 0; i < transition.rows(); ++i) {
    t.push_back(std::vector<double>(transition.row(i).begin(), transition.row(i).end()));
  }
  for (Index i = 0; i < emission_means.rows(); ++i) {
    m.push_back(std::vector<double>(emission_means.row(i).begin(),
                                    emission_means.row(i).end()));
  }
  return {{"n_states", n_states},         {"transition", t},
          {"emission_means", m},          {"emission_std", emission_std},
          {"min_duration", min_duration}, {"max_duration", max_duration},
          {"seed", seed}};
}

HmmSpec HmmSpec::FromJson(const nlohmann::json& j) {
  HmmSpec s;
  s.n_states = j.at("n_states").get<int>();
  const auto t = j.at("transition").get<std::vector<std::vector<double>>>();
  const auto m = j.at("emission_means").get<std::vector<std::vector<double>>>();
  s.transition.resize(static_cast<Index>(t.size()), t.empty() ? 0 : static_cast<Index>(t[0].size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t k = 0; k < t[i].size(); ++k) s.transition(static_cast<Index>(i), static_cast<Index>(k)) = t[i][k];
  }
  s.emission_means.resize(static_cast<Index>(m.size()), m.empty() ? 0 : static_cast<Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t k = 0; k < m[i].size(); ++k) s.emission_means(static_cast<Index>(i), static_cast<Index>(k)) = m[i][k];
  }
  s.emission_std = j.at("emission_std").get<std::vector<double>>();
  s.min_duration = j.at("min_duration").get<int>();
  s.max_duration = j.at("max_duration").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.Validate();
  return s;
}

HmmSpec HmmSpec::DeskDefault(std::uint64_t seed) {
  constexpr int n = 5;
  constexpr int d = 8;
  HmmSpec spec;
  spec.n_states = n;
  spec.seed = seed;
  spec.transition = Matrix::Constant(n, n, 1.0 / (n - 1));
  spec.transition.diagonal().setZero();
  spec.emission_std.assign(n, 1.0);
  spec.min_duration = 4;
  spec.max_duration = 12;

  // Regular simplex: e_i minus the centroid has pairwise distance sqrt(2).
  Matrix simplex = Matrix::Zero(n, d);
  for (int i = 0; i < n; ++i) simplex(i, i) = 1.0;
  simplex.rowwise() -= simplex.colwise().mean();
  simplex *= kDeskMeanSpacing / std::sqrt(2.0);

  Rng rng(DeriveSeed(seed, "hmm-rotation"));
  Matrix g(d, d);
  for (Index i = 0; i < g.size(); ++i) g.data()[i] = rng.Normal();
  const Eigen::MatrixXd gd = g;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gd);
  const Eigen::MatrixXd q = qr.householderQ();
  spec.emission_means = simplex * q;
  return spec;
}

std::vector<Segment> SampleSegments(const HmmSpec& spec, int length, Rng& rng) {
  std::vector<Segment> segs;
  const int span = spec.max_duration - spec.min_duration + 1;
  int state = static_cast<int>(rng.UniformInt(static_cast<std::uint64_t>(spec.n_states)));
  int covered = 0;
  while (covered < length) {
    const int dur = spec.min_duration +
                    static_cast<int>(rng.UniformInt(static_cast<std::uint64_t>(span)));
    const int take = std::min(dur, length - covered);
    segs.push_back({state, take});
    covered += take;
    const auto row = spec.transition.row(state);
    state = SampleCategorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), rng);
  }
  return segs;
}

std::vector<LabeledSequence> SampleCorpus(const HmmSpec& spec, int n_sequences,
                                          int min_length, int max_length) {
  spec.Validate();
  if (n_sequences < 0) throw std::invalid_argument("n_sequences must be >= 0");
  if (min_length < 1 || max_length < min_length) {
    throw std::invalid_argument("invalid sequence length range");
  }
  const int d = spec.dim();
  std::vector<LabeledSequence> corpus(static_cast<std::size_t>(n_sequences));
  for (int i = 0; i < n_sequences; ++i) {
    Rng rng(DeriveSeed(spec.seed, "synth-sequence", static_cast<std::uint64_t>(i)));
    const int len = min_length + static_cast<int>(rng.UniformInt(
                                     static_cast<std::uint64_t>(max_length - min_length + 1)));
    LabeledSequence& seq = corpus[static_cast<std::size_t>(i)];
    seq.frames.source_id = "synth_" + std::to_string(i);
    seq.frames.frame_rate_ms = 20.0;
    seq.frames.frames.resize(len, d);
    seq.states.reserve(static_cast<std::size_t>(len));
    for (const Segment& s : SampleSegments(spec, len, rng)) {
      for (int k = 0; k < s.duration; ++k) seq.states.push_back(s.state);
    }
    double aux = kAuxBase + kAuxStep * seq.states[0];
    seq.aux.resize(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t) {
      const int s = seq.states[static_cast<std::size_t>(t)];
      const double sd = spec.emission_std[static_cast<std::size_t>(s)];
      for (int j = 0; j < d; ++j) {
        seq.frames.frames(t, j) = spec.emission_means(s, j) + sd * rng.Normal();
      }
      aux += kAuxSmoothing * (kAuxBase + kAuxStep * s - aux);
      seq.aux[static_cast<std::size_t>(t)] = aux + kAuxNoise * rng.Normal();
    }
  }
  return corpus;
}

double FrameBayesError(const HmmSpec& spec,
                       std::span<const LabeledSequence> corpus) {
  spec.Validate();
  const Eigen::VectorXd log_prior = OccupancyPrior(spec).array().log();
  double err = 0.0;
  double n = 0.0;
  for (const auto& seq : corpus) {
    for (Index t = 0; t < seq.frames.length(); ++t) {
      const Eigen::VectorXd lp = StateLogLikelihoods(spec, seq.frames.frames, t) + log_prior;
      const double m = lp.maxCoeff();
      const double z = (lp.array() - m).exp().sum();
      err += 1.0 - 1.0 / z;  // max posterior = exp(m - lse) = 1 / z
      n += 1.0;
    }
  }
  return n > 0.0 ? err / n : 0.0;
}

Matrix SequencePosteriors(const HmmSpec& spec, const Matrix& frames) {
  spec.Validate();
  const int n = spec.n_states;
  const int dmax = spec.max_duration;
  const Index len = frames.rows();
  const double p_dur = 1.0 / (spec.max_duration - spec.min_duration + 1);
  // Expanded state (s, r) -> index s * dmax + (r - 1); r = frames remaining.
  const int m = n * dmax;
  auto idx = [dmax](int s, int r) { return s * dmax + (r - 1); };

  Matrix emit(len, n);
  for (Index t = 0; t < len; ++t) {
    const Eigen::VectorXd ll = StateLogLikelihoods(spec, frames, t);
    emit.row(t) = (ll.array() - ll.maxCoeff()).exp().transpose();
  }

  Matrix alpha = Matrix::Zero(len, m);
  for (int s = 0; s < n; ++s) {
    for (int r = spec.min_duration; r <= dmax; ++r) {
      alpha(0, idx(s, r)) = (1.0 / n) * p_dur * emit(0, s);
    }
  }
  alpha.row(0) /= alpha.row(0).sum();
  for (Index t = 1; t < len; ++t) {
    Eigen::VectorXd enter = Eigen::VectorXd::Zero(n);
    for (int sp = 0; sp < n; ++sp) {
      const double ending = alpha(t - 1, idx(sp, 1));
      if (ending == 0.0) continue;
      for (int s = 0; s < n; ++s) enter(s) += ending * spec.transition(sp, s);
    }
    for (int s = 0; s < n; ++s) {
      for (int r = 1; r <= dmax; ++r) {
        double a = r < dmax ? alpha(t - 1, idx(s, r + 1)) : 0.0;
        if (r >= spec.min_duration) a += enter(s) * p_dur;
        alpha(t, idx(s, r)) = a * emit(t, s);
      }
    }
    alpha.row(t) /= alpha.row(t).sum();
  }

  Matrix beta = Matrix::Zero(len, m);
  beta.row(len - 1).setOnes();
  for (Index t = len - 1; t-- > 0;) {
    // Mass flowing into a fresh segment of each state at t + 1.
    Eigen::VectorXd fresh = Eigen::VectorXd::Zero(n);
    for (int s = 0; s < n; ++s) {
      double acc = 0.0;
      for (int r = spec.min_duration; r <= dmax; ++r) acc += beta(t + 1, idx(s, r));
      fresh(s) = acc * p_dur * emit(t + 1, s);
    }
    for (int s = 0; s < n; ++s) {
      for (int r = 2; r <= dmax; ++r) {
        beta(t, idx(s, r)) = emit(t + 1, s) * beta(t + 1, idx(s, r - 1));
      }
      double b = 0.0;
      for (int sn = 0; sn < n; ++sn) b += spec.transition(s, sn) * fresh(sn);
      beta(t, idx(s, 1)) = b;
    }
    beta.row(t) /= beta.row(t).sum();
  }

  Matrix post(len, n);
  for (Index t = 0; t < len; ++t) {
    for (int s = 0; s < n; ++s) {
      double acc = 0.0;
      for (int r = 1; r <= dmax; ++r) acc += alpha(t, idx(s, r)) * beta(t, idx(s, r));
      post(t, s) = acc;
    }
    post.row(t) /= post.row(t).sum();
  }
  return post;
}

double SequenceBayesError(const HmmSpec& spec,
                          std::span<const LabeledSequence> corpus) {
  double err = 0.0;
  double n = 0.0;
  for (const auto& seq : corpus) {
    const Matrix post = SequencePosteriors(spec, seq.frames.frames);
    for (Index t = 0; t < post.rows(); ++t) {
      err += 1.0 - post.row(t).maxCoeff();
      n += 1.0;
    }
  }
  return n > 0.0 ? err / n : 0.0;
}

std::vector<FrameSequence> FramesOf(std::span<const LabeledSequence> corpus) {
  std::vector<FrameSequence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(s.frames);
  return out;
}

void WriteLabeledCorpus(const fs::path& dir, const HmmSpec& spec,
                        std::span<const LabeledSequence> corpus) {
  const auto frames = FramesOf(corpus);
  WriteCorpus(dir, frames);
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& s : corpus) {
    labels.push_back({{"source_id", s.frames.source_id},
                      {"states", s.states},
                      {"aux", s.aux}});
  }
  std::ofstream lf(dir / "labels.json");
  if (!lf) throw std::runtime_error("cannot write labels.json");
  lf << labels.dump() << "\n";
  std::ofstream sf(dir / "hmm_spec.json");
  if (!sf) throw std::runtime_error("cannot write hmm_spec.json");
  sf << spec.ToJson().dump(2) << "\n";
}

std::vector<LabeledSequence> ReadLabeledCorpus(const fs::path& dir) {
  auto frames = ReadCorpus(dir);
  std::ifstream lf(dir / "labels.json");
  if (!lf) throw std::runtime_error("missing labels.json in " + dir.string());
  const nlohmann::json labels = nlohmann::json::parse(lf);
  if (labels.size() != frames.size()) {
    throw std::runtime_error("labels.json does not match the corpus index");
  }
  std::vector<LabeledSequence> out(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    out[i].frames = std::move(frames[i]);
    out[i].states = labels[i].at("states").get<std::vector<int>>();
    out[i].aux = labels[i].at("aux").get<std::vector<double>>();
    if (static_cast<Index>(out[i].states.size()) != out[i].frames.length()) {
      throw std::runtime_error("label length mismatch for " + out[i].frames.source_id);
    }
  }
  return out;
}

}  // namespace vpc

// core/src/features/mel.cc

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

#include "vpc/features/mel.h"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace vpc {

void MelConfig::Validate() const {
  if (n_mels < 1) throw std::invalid_argument("n_mels must be >= 1");
  if (hop_ms <= 0.0) throw std::invalid_argument("hop must be positive");
  if (window_ms < hop_ms) throw std::invalid_argument("window must be >= hop");
  if (stack_factor < 1) throw std::invalid_argument("stack_factor must be >= 1");
  if (log_floor <= 0.0) throw std::invalid_argument("log_floor must be positive");
  if (fmin < 0.0) throw std::invalid_argument("fmin must be >= 0");
}

int WindowSamples(const MelConfig& cfg, int sample_rate) {
  return static_cast<int>(std::lround(cfg.window_ms * sample_rate / 1000.0));
}

int HopSamples(const MelConfig& cfg, int sample_rate) {
  return static_cast<int>(std::lround(cfg.hop_ms * sample_rate / 1000.0));
}

int FftSize(const MelConfig& cfg, int sample_rate) {
  int n = 1;
  while (n < WindowSamples(cfg, sample_rate)) n <<= 1;
  return n;
}

Index NumFrames(Index num_samples, const MelConfig& cfg, int sample_rate) {
  const Index win = WindowSamples(cfg, sample_rate);
  const Index hop = HopSamples(cfg, sample_rate);
  if (num_samples < win) return 0;
  return 1 + (num_samples - win) / hop;
}

double HzToMel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

double MelToHz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

MelFilterbank MakeMelFilterbank(const MelConfig& cfg, int sample_rate) {
  cfg.Validate();
  const int nfft = FftSize(cfg, sample_rate);
  const int nbins = nfft / 2 + 1;
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : sample_rate / 2.0;
  if (fmax <= cfg.fmin) throw std::invalid_argument("fmax must exceed fmin");
  const double mel_lo = HzToMel(cfg.fmin);
  const double mel_hi = HzToMel(fmax);
  const double spacing = (mel_hi - mel_lo) / (cfg.n_mels + 1);

  MelFilterbank fb;
  fb.weights = Matrix::Zero(cfg.n_mels, nbins);
  fb.center_hz.resize(static_cast<std::size_t>(cfg.n_mels));
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = mel_lo + m * spacing;
    const double center = left + spacing;
    const double right = center + spacing;
    fb.center_hz[static_cast<std::size_t>(m)] = MelToHz(center);
    for (int b = 0; b < nbins; ++b) {
      const double mel = HzToMel(static_cast<double>(b) * sample_rate / nfft);
      if (mel > left && mel < right) {
        fb.weights(m, b) = mel <= center ? (mel - left) / spacing
                                         : (right - mel) / spacing;
      }
    }
  }
  return fb;
}

FrameSequence LogMel(const Waveform& wave, const MelConfig& cfg) {
  cfg.Validate();
  if (wave.sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  const int win = WindowSamples(cfg, wave.sample_rate);
  const int hop = HopSamples(cfg, wave.sample_rate);
  const Index frames = NumFrames(static_cast<Index>(wave.samples.size()), cfg,
                                 wave.sample_rate);
  if (frames == 0) {
    throw std::invalid_argument("waveform shorter than one analysis window");
  }
  const int nfft = FftSize(cfg, wave.sample_rate);
  const int nbins = nfft / 2 + 1;
  const MelFilterbank fb = MakeMelFilterbank(cfg, wave.sample_rate);

  std::vector<double> window(static_cast<std::size_t>(win));
  for (int n = 0; n < win; ++n) {
    window[static_cast<std::size_t>(n)] =
        win > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (win - 1))
                : 1.0;
  }

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(nfft), 0.0);
  std::vector<std::complex<double>> spec;
  Eigen::VectorXd power(nbins);

  FrameSequence out;
  out.frames.resize(frames, cfg.n_mels);
  out.frame_rate_ms = cfg.hop_ms;
  for (Index t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * static_cast<std::size_t>(hop);
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int n = 0; n < win; ++n) {
      buf[static_cast<std::size_t>(n)] =
          wave.samples[start + static_cast<std::size_t>(n)] *
          window[static_cast<std::size_t>(n)];
    }
    fft.fwd(spec, buf);
    for (int b = 0; b < nbins; ++b) power(b) = std::norm(spec[static_cast<std::size_t>(b)]);
    const Eigen::VectorXd energy = fb.weights * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      out.frames(t, m) = std::log(energy(m) + cfg.log_floor);
    }
  }
  return out;
}

FrameSequence StackFrames(const FrameSequence& f, int factor) {
  if (factor < 1) throw std::invalid_argument("stack factor must be >= 1");
  if (f.length() < factor) {
    throw std::invalid_argument("sequence shorter than the stack factor");
  }
  const Index t_out = f.length() / factor;
  const Index d = f.dim();
  FrameSequence out;
  out.source_id = f.source_id;
  out.frame_rate_ms = f.frame_rate_ms * factor;
  out.frames.resize(t_out, d * factor);
  for (Index i = 0; i < t_out; ++i) {
    for (int j = 0; j < factor; ++j) {
      out.frames.block(i, j * d, 1, d) = f.frames.row(i * factor + j);
    }
  }
  return out;
}

FrameSequence UnstackFrames(const FrameSequence& f, int factor) {
  if (factor < 1 || f.dim() % factor != 0) {
    throw std::invalid_argument("dimension is not a multiple of the stack factor");
  }
  const Index d = f.dim() / factor;
  FrameSequence out;
  out.source_id = f.source_id;
  out.frame_rate_ms = f.frame_rate_ms / factor;
  out.frames.resize(f.length() * factor, d);
  for (Index i = 0; i < f.length(); ++i) {
    for (int j = 0; j < factor; ++j) {
      out.frames.row(i * factor + j) = f.frames.block(i, j * d, 1, d);
    }
  }
  return out;
}

std::vector<int> DownsampleLabels(std::span<const int> labels, int factor) {
  if (factor < 1) throw std::invalid_argument("stack factor must be >= 1");
  const std::size_t groups = labels.size() / static_cast<std::size_t>(factor);
  std::vector<int> out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    const auto group = labels.subspan(g * static_cast<std::size_t>(factor),
                                      static_cast<std::size_t>(factor));
    int best = group[0];
    int best_count = 0;
    for (int candidate : group) {
      int count = 0;
      for (int l : group) count += (l == candidate);
      if (count > best_count || (count == best_count && candidate < best)) {
        best = candidate;
        best_count = count;
      }
    }
    out[g] = best;
  }
  return out;
}

nlohmann::json FeatureStats::ToJson() const {
  return {{"mean", mean}, {"stddev", stddev}};
}

FeatureStats FeatureStats::FromJson(const nlohmann::json& j) {
  FeatureStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  if (s.mean.size() != s.stddev.size()) {
    throw std::invalid_argument("feature stats: mean/stddev size mismatch");
  }
  return s;
}

void FeatureStats::Save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << ToJson().dump(2) << "\n";
}

FeatureStats FeatureStats::Load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return FromJson(nlohmann::json::parse(f));
}

FeatureStats ComputeStats(std::span<const Matrix> mats) {
  if (mats.empty()) throw std::invalid_argument("no data for feature stats");
  const Index d = mats[0].cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  double n = 0.0;
  for (const Matrix& m : mats) {
    if (m.cols() != d) throw std::invalid_argument("feature stats: dim mismatch");
    sum += m.colwise().sum().transpose();
    n += static_cast<double>(m.rows());
  }
  if (n == 0.0) throw std::invalid_argument("no frames for feature stats");
  const Eigen::VectorXd mean = sum / n;
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(d);
  for (const Matrix& m : mats) {
    sq += (m.rowwise() - mean.transpose()).array().square().matrix().colwise().sum().transpose();
  }
  FeatureStats s;
  s.mean.assign(mean.data(), mean.data() + d);
  s.stddev.resize(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) s.stddev[static_cast<std::size_t>(i)] = std::sqrt(sq(i) / n);
  return s;
}

FeatureStats ComputeStats(std::span<const FrameSequence> corpus) {
  std::vector<Matrix> mats;
  mats.reserve(corpus.size());
  for (const auto& f : corpus) mats.push_back(f.frames);
  return ComputeStats(std::span<const Matrix>(mats));
}

Matrix Normalize(const Matrix& m, const FeatureStats& stats) {
  if (static_cast<std::size_t>(m.cols()) != stats.mean.size()) {
    throw std::invalid_argument("feature stats dimensionality mismatch: " +
                                std::to_string(stats.mean.size()) + " vs " +
                                std::to_string(m.cols()));
  }
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    const double sd = stats.stddev[static_cast<std::size_t>(j)];
    if (!(sd > 0.0)) continue;
    out.col(j) = (m.col(j).array() - stats.mean[static_cast<std::size_t>(j)]) / sd;
  }
  return out;
}

FrameSequence Normalize(const FrameSequence& f, const FeatureStats& stats) {
  FrameSequence out = f;
  out.frames = Normalize(f.frames, stats);
  return out;
}

}  // namespace vpc

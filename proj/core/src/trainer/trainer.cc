// core/src/trainer/trainer.cc

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

#include "vpc/trainer/trainer.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "vpc/features/feature_cache.h"
#include "vpc/trainer/batching.h"

namespace vpc {

namespace fs = std::filesystem;

namespace {

std::string DtypeName(TensorDtype d) { return d == TensorDtype::kFloat32 ? "float32" : "float64"; }

TensorDtype ParseDtype(const std::string& s) {
  if (s == "float32") return TensorDtype::kFloat32;
  if (s == "float64") return TensorDtype::kFloat64;
  throw std::invalid_argument("unknown checkpoint dtype '" + s + "'");
}

void WriteJsonFile(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

nlohmann::json ReadJsonFile(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  return nlohmann::json::parse(f);
}

std::string JsonToOption(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("option " + key + ": cannot parse '" + v + "'");
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("option " + key + ": expected true or false, got '" + v + "'");
}

}  // namespace

void TrainConfig::SetOption(const std::string& key, const std::string& v) {
  auto i = [&] { return ParseNumber<int>(key, v); };
  auto d = [&] { return ParseNumber<double>(key, v); };
  if (key == "objective") objective = ParseObjective(v);
  else if (key == "estimator") estimator.kind = ParseEstimatorKind(v);
  else if (key == "gumbel_temperature") estimator.gumbel_temperature = d();
  else if (key == "n_samples") estimator.n_samples = i();
  else if (key == "codebook_init") codebook_init = ParseCodebookInit(v);
  else if (key == "codebook_size") codebook_size = i();
  else if (key == "lr") lr = d();
  else if (key == "batch_size") batch_size = i();
  else if (key == "epochs") epochs = i();
  else if (key == "max_frames") max_frames = ParseNumber<Index>(key, v);
  else if (key == "seed") seed = ParseNumber<std::uint64_t>(key, v);
  else if (key == "tau") tau = d();
  else if (key == "mask.span") mask.span_frames = i();
  else if (key == "mask.start_prob") mask.start_prob = d();
  else if (key == "future.shift") future.shift = i();
  else if (key == "future.min_context") future.min_context = i();
  else if (key == "nce.negatives") nce.n_negatives = i();
  else if (key == "nce.scale") nce.scale = d();
  else if (key == "nce.gumbel_start") nce.gumbel_start = d();
  else if (key == "nce.gumbel_min") nce.gumbel_min = d();
  else if (key == "nce.gumbel_decay") nce.gumbel_decay = d();
  else if (key == "encoder.layers") encoder.layers = i();
  else if (key == "encoder.model_dim") encoder.model_dim = i();
  else if (key == "encoder.heads") encoder.heads = i();
  else if (key == "encoder.ffn_dim") encoder.ffn_dim = i();
  else if (key == "encoder.dropout") encoder.dropout = d();
  else if (key == "kmeans.max_iters") kmeans.max_iters = i();
  else if (key == "kmeans.rel_tol") kmeans.rel_tol = d();
  else if (key == "checkpoint_every") checkpoint_every = i();
  else if (key == "smoothing_window") smoothing_window = i();
  else if (key == "checkpoint_dtype") checkpoint_dtype = ParseDtype(v);
  else if (key == "resume_from") resume_from = v;
  else if (key == "second_iteration") second_iteration = ParseBool(key, v);
  else if (key == "second.teacher") second.teacher = v;
  else if (key == "second.layer") second.teacher_layer = i();
  else if (key == "second.tau") second.tau = d();
  else if (key == "second.codebook_init") second.codebook_init = ParseCodebookInit(v);
  else throw std::invalid_argument("unknown option '" + key + "'");
}

void TrainConfig::Validate() const {
  estimator.Validate();
  mask.Validate();
  future.Validate();
  nce.Validate();
  encoder.Validate();
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (codebook_size < 2) throw std::invalid_argument("codebook_size must be >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (max_frames < 1) throw std::invalid_argument("max_frames must be >= 1");
  if (smoothing_window < 1) throw std::invalid_argument("smoothing_window must be >= 1");
  if (second_iteration) {
    if (second.teacher.empty()) throw std::invalid_argument("second iteration needs a teacher");
    if (!(second.tau > 0.0)) throw std::invalid_argument("second-iteration tau must be > 0");
    if (objective != Objective::kMaskedVpc) {
      throw std::invalid_argument("second iteration trains with masked_vpc");
    }
  }
}

std::string TrainConfig::Label() const {
  std::string s = ToString(objective);
  if (objective == Objective::kMaskedVpc || objective == Objective::kFutureVpc) {
    s += "/" + ToString(estimator.kind) + "/" +
         ToString(second_iteration ? second.codebook_init : codebook_init);
  }
  if (second_iteration) s += "/iter2";
  return s;
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"objective", ToString(objective)},
          {"estimator", ToString(estimator.kind)},
          {"gumbel_temperature", estimator.gumbel_temperature},
          {"n_samples", estimator.n_samples},
          {"codebook_init", ToString(codebook_init)},
          {"codebook_size", codebook_size},
          {"lr", lr},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"max_frames", max_frames},
          {"seed", seed},
          {"tau", tau},
          {"mask.span", mask.span_frames},
          {"mask.start_prob", mask.start_prob},
          {"future.shift", future.shift},
          {"future.min_context", future.min_context},
          {"nce.negatives", nce.n_negatives},
          {"nce.scale", nce.scale},
          {"nce.gumbel_start", nce.gumbel_start},
          {"nce.gumbel_min", nce.gumbel_min},
          {"nce.gumbel_decay", nce.gumbel_decay},
          {"encoder.layers", encoder.layers},
          {"encoder.model_dim", encoder.model_dim},
          {"encoder.heads", encoder.heads},
          {"encoder.ffn_dim", encoder.ffn_dim},
          {"encoder.dropout", encoder.dropout},
          {"kmeans.max_iters", kmeans.max_iters},
          {"kmeans.rel_tol", kmeans.rel_tol},
          {"checkpoint_every", checkpoint_every},
          {"smoothing_window", smoothing_window},
          {"checkpoint_dtype", DtypeName(checkpoint_dtype)},
          {"resume_from", resume_from.string()},
          {"second_iteration", second_iteration},
          {"second.teacher", second.teacher.string()},
          {"second.layer", second.teacher_layer},
          {"second.tau", second.tau},
          {"second.codebook_init", ToString(second.codebook_init)}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) c.SetOption(key, JsonToOption(value));
  return c;
}

RunRecord RunRecord::Load(const fs::path& run_dir) {
  const nlohmann::json j = ReadJsonFile(run_dir / "run.json");
  RunRecord r;
  r.label = j.at("label").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  r.run_dir = run_dir;
  r.curve_path = run_dir / j.at("curve").get<std::string>();
  r.checkpoint_path = run_dir / j.at("checkpoint").get<std::string>();
  r.final_neg_elbo = j.at("final_neg_elbo").get<double>();
  r.first_total = j.at("first_total").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.corpus_fingerprint = j.at("corpus_fingerprint").get<std::string>();
  r.encoder_config = j.at("encoder");
  std::ifstream f(r.curve_path);
  if (!f) throw std::runtime_error("missing curve file " + r.curve_path.string());
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const nlohmann::json c = nlohmann::json::parse(line);
    CurvePoint p;
    p.step = c.at("step").get<std::int64_t>();
    p.epoch = c.at("epoch").get<int>();
    p.loss.neg_entropy = c.at("neg_entropy").get<double>();
    p.loss.cross_entropy = c.at("cross_entropy").get<double>();
    p.loss.reconstruction = c.at("reconstruction").get<double>();
    p.loss.total = c.at("total").get<double>();
    p.loss.codeword_usage_entropy = c.at("codeword_usage_entropy").get<double>();
    p.loss.frames_counted = c.value("frames", Index{0});
    r.curve.push_back(p);
  }
  return r;
}

nlohmann::json RunRecord::ToJson() const {
  return {{"label", label},
          {"seed", seed},
          {"config", config},
          {"curve", fs::relative(curve_path, run_dir).string()},
          {"checkpoint", fs::relative(checkpoint_path, run_dir).string()},
          {"final_neg_elbo", final_neg_elbo},
          {"first_total", first_total},
          {"steps", curve.size()},
          {"wall_seconds", wall_seconds},
          {"corpus_fingerprint", corpus_fingerprint},
          {"encoder", encoder_config}};
}

double SmoothedFinal(const std::vector<CurvePoint>& curve, int window) {
  if (curve.empty()) return std::nan("");
  const std::size_t n = std::min(curve.size(), static_cast<std::size_t>(window));
  double acc = 0.0;
  for (std::size_t i = curve.size() - n; i < curve.size(); ++i) acc += curve[i].loss.total;
  return acc / static_cast<double>(n);
}

Model LoadModel(const fs::path& checkpoint_dir) {
  Checkpoint ck = LoadCheckpoint(checkpoint_dir);
  Model m;
  m.config = ck.config;
  m.encoder = EncoderConfig::FromJson(ck.config.at("encoder"));
  m.params = std::move(ck.params);
  m.input_stats = FeatureStats::Load(checkpoint_dir / "feature_stats.json");
  return m;
}

Matrix ExtractLayer(const Model& model, const Matrix& raw_frames, int layer) {
  if (layer < 0 || layer > model.encoder.layers) {
    throw std::invalid_argument("layer " + std::to_string(layer) + " outside [0, " +
                                std::to_string(model.encoder.layers) + "]");
  }
  Tape tape;
  // Binding needs mutable parameters; the values are only read.
  auto& params = const_cast<num::ParameterStore&>(model.params);
  const BoundParams bound(tape, params);
  EncodeOptions opt;
  opt.stop_layer = layer == model.encoder.layers ? -1 : layer;
  const EncoderOutput out = Encode(model.encoder, bound,
                                   tape.Constant(Normalize(raw_frames, model.input_stats)), opt);
  return out.layers.at(static_cast<std::size_t>(layer)).value();
}

namespace {

struct TrainData {
  std::vector<Matrix> inputs;   // normalized, truncated
  std::vector<Matrix> targets;  // what q is computed from
  FeatureStats input_stats;
  std::string fingerprint;
};

TrainData PrepareInputs(const std::vector<FrameSequence>& corpus, const TrainConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");
  TrainData data;
  data.fingerprint = CorpusFingerprint(corpus);
  std::vector<Matrix> raw;
  raw.reserve(corpus.size());
  for (const auto& s : corpus) raw.push_back(Truncate(s.frames, cfg.max_frames));
  data.input_stats = ComputeStats(std::span<const Matrix>(raw));
  for (const Matrix& m : raw) data.inputs.push_back(Normalize(m, data.input_stats));
  return data;
}

void InitCodebook(const TrainConfig& cfg, const std::vector<Matrix>& targets,
                  double* kmeans_distortion, num::ParameterStore& store) {
  const Matrix all = StackCorpus(targets);
  const CodebookInit init = cfg.second_iteration ? cfg.second.codebook_init : cfg.codebook_init;
  Codebook cb;
  if (cfg.objective == Objective::kHubert) {
    const KmeansResult km =
        FitKmeans(all, KmeansPlusPlusInit(all, cfg.codebook_size, cfg.seed), cfg.kmeans);
    if (kmeans_distortion != nullptr) *kmeans_distortion = km.distortion;
    cb = km.codebook;
  } else if (init == CodebookInit::kKmeansPP) {
    cb = KmeansPlusPlusInit(all, cfg.codebook_size, cfg.seed);
  } else {
    cb = RandomCodebook(cfg.codebook_size, all.cols(), cfg.seed);
  }
  store.Add("codebook", cb.centroids, cfg.objective != Objective::kHubert);
}

void AppendCurve(std::ofstream& f, const CurvePoint& p, const TrainConfig& cfg) {
  nlohmann::json j = {{"step", p.step},
                      {"epoch", p.epoch},
                      {"objective", ToString(cfg.objective)},
                      {"estimator", ToString(cfg.estimator.kind)},
                      {"neg_entropy", p.loss.neg_entropy},
                      {"cross_entropy", p.loss.cross_entropy},
                      {"reconstruction", p.loss.reconstruction},
                      {"total", p.loss.total},
                      {"codeword_usage_entropy", p.loss.codeword_usage_entropy},
                      {"frames", p.loss.frames_counted}};
  f << j.dump() << "\n";
  f.flush();
}

RunRecord Train(const TrainData& data, const TrainConfig& cfg_in, const fs::path& run_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = cfg_in;
  cfg.Validate();
  EncoderConfig enc = cfg.encoder;
  enc.input_dim = static_cast<int>(data.inputs.at(0).cols());
  enc.codebook_size = cfg.codebook_size;
  if (cfg.objective == Objective::kFutureVpc) enc.causal = true;
  enc.Validate();

  fs::create_directories(run_dir);
  WriteJsonFile(run_dir / "config.json", cfg.ToJson());
  data.input_stats.Save(run_dir / "feature_stats.json");

  num::ParameterStore store;
  num::Adam adam(num::AdamOptions{cfg.lr, 0.9, 0.999, 1e-8});
  std::int64_t step = 0;
  int start_epoch = 0;
  double kmeans_distortion = std::nan("");
  if (!cfg.resume_from.empty()) {
    Checkpoint ck = LoadCheckpoint(cfg.resume_from);
    store = std::move(ck.params);
    if (ck.has_optimizer) adam = ck.optimizer;
    step = ck.step;
    start_epoch = ck.epoch;
  } else {
    InitEncoderParams(enc, cfg.seed, store);
    InitCodebook(cfg, data.targets, &kmeans_distortion, store);
    if (cfg.objective == Objective::kMaskedNce) {
      InitNceParams(enc, data.targets.at(0).cols(), cfg.seed, store);
    }
  }

  nlohmann::json ck_config = {{"train", cfg.ToJson()},
                              {"encoder", enc.ToJson()},
                              {"target_dim", data.targets.at(0).cols()},
                              {"corpus_fingerprint", data.fingerprint}};
  auto save = [&](const fs::path& dir, int epoch) {
    SaveCheckpoint(dir, store, ck_config, cfg.seed, step, epoch, &adam, cfg.checkpoint_dtype);
    data.input_stats.Save(dir / "feature_stats.json");
  };

  std::vector<Index> lengths;
  for (const Matrix& m : data.inputs) lengths.push_back(m.rows());

  RunRecord rec;
  rec.label = cfg.Label();
  rec.seed = cfg.seed;
  rec.config = cfg.ToJson();
  rec.run_dir = run_dir;
  rec.curve_path = run_dir / "curve.jsonl";
  rec.checkpoint_path = run_dir / "checkpoint";
  rec.corpus_fingerprint = data.fingerprint;
  rec.encoder_config = enc.ToJson();
  std::ofstream curve(rec.curve_path);
  if (!curve) throw std::runtime_error("cannot write " + rec.curve_path.string());

  const double tau = cfg.second_iteration ? cfg.second.tau : cfg.tau;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const auto batches = MakeBatches(lengths, cfg.batch_size, DeriveSeed(cfg.seed, "batches", static_cast<std::uint64_t>(epoch)));
    for (const auto& batch : batches) {
      const auto s = static_cast<std::uint64_t>(step);
      Rng mask_rng(DeriveSeed(cfg.seed, "mask", s));
      Rng dropout_rng(DeriveSeed(cfg.seed, "dropout", s));
      Rng noise_rng(DeriveSeed(cfg.seed, "gumbel", s));
      Tape tape;
      const BoundParams bound(tape, store);
      LossContext ctx;
      ctx.encoder = &enc;
      ctx.params = &bound;
      ctx.train = true;
      ctx.dropout_rng = &dropout_rng;
      ctx.noise.rng = &noise_rng;

      std::vector<Partition> parts;
      parts.reserve(batch.size());
      for (std::size_t idx : batch) {
        if (cfg.objective != Objective::kFutureVpc) {
          parts.push_back(SampleMask(data.inputs[idx].rows(), cfg.mask, mask_rng));
        }
      }
      LossTerms terms;
      if (cfg.objective == Objective::kMaskedNce) {
        NceBatch nb;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          nb.inputs.push_back(&data.inputs[batch[b]]);
          nb.partitions.push_back(&parts[b]);
        }
        terms = NceLoss(ctx, nb, cfg.nce, step, noise_rng);
      } else {
        std::vector<LossTerms> per;
        per.reserve(batch.size());
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const Matrix& x = data.inputs[batch[b]];
          const Matrix& y = data.targets[batch[b]];
          switch (cfg.objective) {
            case Objective::kHubert:
              per.push_back(HubertObjLoss(ctx, x, y, parts[b]));
              break;
            case Objective::kMaskedVpc:
              per.push_back(MaskedVpcLoss(ctx, x, y, parts[b], tau, cfg.estimator));
              break;
            case Objective::kFutureVpc:
              per.push_back(FutureVpcLoss(ctx, x, y, MakeFuturePartition(x.rows(), cfg.future),
                                          tau, cfg.estimator));
              break;
            case Objective::kMaskedNce:
              break;
          }
        }
        terms = AverageTerms(per);
      }
      CurvePoint point;
      point.step = step;
      point.epoch = epoch;
      point.loss = Breakdown(terms, cfg.codebook_size);
      if (!std::isfinite(point.loss.total)) {
        WriteJsonFile(run_dir / "error.json",
                      {{"error", "non-finite loss"}, {"step", step}, {"epoch", epoch},
                       {"loss", point.loss.ToJson()}});
        throw num::NonFiniteError("non-finite loss at step " + std::to_string(step));
      }
      AppendCurve(curve, point, cfg);
      rec.curve.push_back(point);

      store.ZeroGrad();
      tape.Backward(terms.total);
      adam.Step(store);
      ++step;
    }
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d", epoch + 1);
      save(run_dir / "checkpoints" / name, epoch + 1);
    }
  }
  save(rec.checkpoint_path, std::max(cfg.epochs, start_epoch));

  rec.final_neg_elbo = SmoothedFinal(rec.curve, cfg.smoothing_window);
  rec.first_total = rec.curve.empty() ? std::nan("") : rec.curve.front().loss.total;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json run = rec.ToJson();
  if (std::isfinite(kmeans_distortion)) run["kmeans_distortion"] = kmeans_distortion;
  WriteJsonFile(run_dir / "run.json", run);
  return rec;
}

}  // namespace

RunRecord Pretrain(const std::vector<FrameSequence>& corpus, const TrainConfig& cfg,
                   const fs::path& run_dir) {
  if (cfg.second_iteration) return SecondIteration(corpus, cfg, run_dir);
  TrainData data = PrepareInputs(corpus, cfg);
  data.targets = data.inputs;
  return Train(data, cfg, run_dir);
}

RunRecord SecondIteration(const std::vector<FrameSequence>& corpus, const TrainConfig& cfg,
                          const fs::path& run_dir) {
  if (!cfg.second_iteration) {
    throw std::invalid_argument("second_iteration is not enabled in the config");
  }
  cfg.Validate();
  const Model teacher = LoadModel(cfg.second.teacher);
  const int layer =
      cfg.second.teacher_layer >= 0 ? cfg.second.teacher_layer : teacher.encoder.layers / 2;
  if (layer > teacher.encoder.layers) {
    throw std::invalid_argument("teacher layer " + std::to_string(layer) +
                                " out of range for a " + std::to_string(teacher.encoder.layers) +
                                "-layer teacher");
  }
  TrainData data = PrepareInputs(corpus, cfg);
  std::vector<Matrix> hidden;
  hidden.reserve(corpus.size());
  for (const auto& s : corpus) {
    hidden.push_back(ExtractLayer(teacher, Truncate(s.frames, cfg.max_frames), layer));
  }
  const FeatureStats target_stats = ComputeStats(std::span<const Matrix>(hidden));
  for (const Matrix& h : hidden) data.targets.push_back(Normalize(h, target_stats));
  fs::create_directories(run_dir);
  target_stats.Save(run_dir / "target_stats.json");
  WriteJsonFile(run_dir / "teacher.json",
                {{"teacher", cfg.second.teacher.string()}, {"layer", layer}});
  return Train(data, cfg, run_dir);
}

}  // namespace vpc

// tools/cli/commands.cc

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

#include "cli/commands.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli/config.h"
#include "vpc/codebook/kmeans.h"
#include "vpc/features/feature_cache.h"
#include "vpc/features/mel.h"
#include "vpc/features/wav.h"
#include "vpc/objectives/checks.h"
#include "vpc/probe/probe.h"
#include "vpc/synthdata/hmm.h"
#include "vpc/trainer/compare.h"
#include "vpc/trainer/trainer.h"

namespace vpc::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

// Resolved invocation shared by every command.
struct Invocation {
  std::string command;
  Common common;
  KeyValueConfig config;
  fs::path out_dir;
  std::vector<std::string> argv;

  std::uint64_t RequireSeed() const {
    if (!common.seed) throw ConfigError(command + " is stochastic and requires --seed");
    return *common.seed;
  }
  void RejectUnknown() const {
    if (!config.values().empty()) {
      throw ConfigError("unknown key '" + config.values().begin()->first + "' for " + command);
    }
  }
  RunManifest Manifest(const nlohmann::json& resolved) const {
    RunManifest m;
    m.command = command;
    m.config_path = common.config_path;
    m.resolved_config = resolved;
    m.seed = common.seed;
    m.argv = argv;
    return m;
  }
};

// Fresh output directory: never reuse one that already holds a manifest.
fs::path PrepareOut(const Invocation& inv, const std::string& default_name) {
  fs::path dir = inv.common.out.empty() ? ArtifactRoot() / inv.command / default_name
                                        : fs::path(inv.common.out);
  if (fs::exists(dir / "manifest.json")) {
    throw ConfigError("output directory " + dir.string() + " already holds a run; pick another --out");
  }
  fs::create_directories(dir);
  return dir;
}

std::string SeedName(const Invocation& inv) {
  return inv.common.seed ? "seed" + std::to_string(*inv.common.seed) : "run";
}

fs::path CheckpointDir(const fs::path& p) {
  if (fs::exists(p / "checkpoint" / "manifest.json")) return p / "checkpoint";
  if (fs::exists(p / "manifest.json") && fs::exists(p / "feature_stats.json")) return p;
  throw std::runtime_error("no checkpoint found at " + p.string());
}

void RequireDir(const std::string& what, const fs::path& p) {
  if (p.empty()) throw ConfigError("missing --" + what);
  if (!fs::is_directory(p)) throw std::runtime_error(what + " directory " + p.string() + " not found");
}

// Applies remaining keys to a TrainConfig, mapping bad values to ConfigError.
TrainConfig BuildTrainConfig(Invocation& inv) {
  TrainConfig cfg;
  try {
    for (const auto& [k, v] : inv.config.values()) cfg.SetOption(k, v);
    cfg.seed = inv.RequireSeed();
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

int CmdFeatures(Invocation& inv, const std::string& input) {
  RequireDir("input", input);
  MelConfig mel;
  mel.n_mels = static_cast<int>(inv.config.GetInt("mel.n_mels", mel.n_mels));
  mel.window_ms = inv.config.GetDouble("mel.window_ms", mel.window_ms);
  mel.hop_ms = inv.config.GetDouble("mel.hop_ms", mel.hop_ms);
  mel.stack_factor = static_cast<int>(inv.config.GetInt("mel.stack_factor", mel.stack_factor));
  mel.fmin = inv.config.GetDouble("mel.fmin", mel.fmin);
  mel.fmax = inv.config.GetDouble("mel.fmax", mel.fmax);
  for (const char* k : {"mel.n_mels", "mel.window_ms", "mel.hop_ms", "mel.stack_factor", "mel.fmin", "mel.fmax"}) {
    inv.config.Take(k);
  }
  inv.RejectUnknown();
  try {
    mel.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::vector<fs::path> wavs;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.path().extension() == ".wav") wavs.push_back(e.path());
  }
  std::sort(wavs.begin(), wavs.end());
  if (wavs.empty()) throw std::runtime_error("no .wav files in " + input);
  const fs::path out = PrepareOut(inv, fs::path(input).filename().string());
  std::vector<FrameSequence> corpus;
  for (const fs::path& w : wavs) {
    FrameSequence f = StackFrames(LogMel(LoadWav(w), mel), mel.stack_factor);
    f.source_id = w.filename().string();
    corpus.push_back(std::move(f));
  }
  WriteCorpus(out, corpus);
  ComputeStats(std::span<const FrameSequence>(corpus)).Save(out / "feature_stats.json");
  RunManifest m = inv.Manifest({{"mel.n_mels", mel.n_mels},
                                {"mel.window_ms", mel.window_ms},
                                {"mel.hop_ms", mel.hop_ms},
                                {"mel.stack_factor", mel.stack_factor},
                                {"mel.fmin", mel.fmin},
                                {"mel.fmax", mel.fmax},
                                {"input", input}});
  m.artifacts = {{"corpus", out.string()}, {"stats", (out / "feature_stats.json").string()}};
  m.Write(out);
  std::cout << "features: " << corpus.size() << " utterances -> " << out.string() << "\n";
  return kExitOk;
}

int CmdSynth(Invocation& inv) {
  const std::uint64_t seed = inv.RequireSeed();
  const int n = static_cast<int>(inv.config.GetInt("n_sequences", 500));
  const int min_len = static_cast<int>(inv.config.GetInt("min_length", 60));
  const int max_len = static_cast<int>(inv.config.GetInt("max_length", 120));
  for (const char* k : {"n_sequences", "min_length", "max_length"}) inv.config.Take(k);
  inv.RejectUnknown();
  const HmmSpec spec = HmmSpec::DeskDefault(seed);
  std::vector<LabeledSequence> corpus;
  try {
    corpus = SampleCorpus(spec, n, min_len, max_len);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const fs::path out = PrepareOut(inv, SeedName(inv));
  WriteLabeledCorpus(out, spec, corpus);
  const double frame_bayes = FrameBayesError(spec, corpus);
  const double seq_bayes = SequenceBayesError(spec, corpus);
  std::ofstream(out / "bayes.json") << nlohmann::json{{"frame_bayes_error", frame_bayes},
                                                      {"sequence_bayes_error", seq_bayes}}
                                           .dump(2)
                                    << "\n";
  RunManifest m = inv.Manifest({{"n_sequences", n}, {"min_length", min_len}, {"max_length", max_len}});
  m.artifacts = {{"corpus", out.string()},
                 {"labels", (out / "labels.json").string()},
                 {"hmm_spec", (out / "hmm_spec.json").string()},
                 {"bayes", (out / "bayes.json").string()}};
  m.Write(out);
  std::cout << "synth: " << n << " sequences, frame Bayes error " << frame_bayes
            << ", sequence Bayes error " << seq_bayes << " -> " << out.string() << "\n";
  return kExitOk;
}

int CmdKmeans(Invocation& inv, const std::string& corpus_dir) {
  const std::uint64_t seed = inv.RequireSeed();
  RequireDir("corpus", corpus_dir);
  const auto k = inv.config.GetInt("k", 8);
  KmeansOptions opt;
  opt.max_iters = static_cast<int>(inv.config.GetInt("max_iters", opt.max_iters));
  opt.rel_tol = inv.config.GetDouble("rel_tol", opt.rel_tol);
  const std::string init = inv.config.GetString("init", "kmeans++");
  for (const char* key : {"k", "max_iters", "rel_tol", "init"}) inv.config.Take(key);
  inv.RejectUnknown();
  CodebookInit kind;
  try {
    kind = ParseCodebookInit(init);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto corpus = ReadCorpus(corpus_dir);
  const FeatureStats stats = ComputeStats(std::span<const FrameSequence>(corpus));
  std::vector<Matrix> mats;
  for (const auto& s : corpus) mats.push_back(Normalize(s.frames, stats));
  const Matrix data = StackCorpus(mats);
  const Codebook start = kind == CodebookInit::kKmeansPP ? KmeansPlusPlusInit(data, k, seed)
                                                         : RandomCodebook(k, data.cols(), seed);
  const KmeansResult res = FitKmeans(data, start, opt);
  const fs::path out = PrepareOut(inv, "k" + std::to_string(k) + "-" + SeedName(inv));
  res.codebook.Save(out / "codebook");
  stats.Save(out / "feature_stats.json");
  std::ofstream(out / "kmeans.json") << nlohmann::json{{"distortion", res.distortion},
                                                       {"history", res.history},
                                                       {"iterations", res.iterations},
                                                       {"empty_reassignments", res.empty_reassignments}}
                                            .dump(2)
                                     << "\n";
  RunManifest m = inv.Manifest({{"k", k},
                                {"max_iters", opt.max_iters},
                                {"rel_tol", opt.rel_tol},
                                {"init", init},
                                {"corpus", corpus_dir}});
  m.artifacts = {{"codebook", (out / "codebook").string()}, {"report", (out / "kmeans.json").string()}};
  m.Write(out);
  std::cout << "kmeans: K=" << k << " distortion " << res.distortion << " after " << res.iterations
            << " iterations -> " << out.string() << "\n";
  return kExitOk;
}

int Train(Invocation& inv, const std::string& corpus_dir, TrainConfig cfg) {
  RequireDir("corpus", corpus_dir);
  const auto corpus = ReadCorpus(corpus_dir);
  const std::string name = [&] {
    std::string s = cfg.Label() + "-" + SeedName(inv);
    std::replace(s.begin(), s.end(), '/', '-');
    return s;
  }();
  const fs::path out = PrepareOut(inv, name);
  nlohmann::json resolved = cfg.ToJson();
  resolved["corpus"] = corpus_dir;
  RunManifest m = inv.Manifest(resolved);
  m.artifacts = {{"run", (out / "run.json").string()},
                 {"curve", (out / "curve.jsonl").string()},
                 {"checkpoint", (out / "checkpoint").string()}};
  const RunRecord rec = Pretrain(corpus, cfg, out);
  m.Write(out);
  std::cout << inv.command << ": " << rec.label << " seed " << rec.seed << " steps "
            << rec.curve.size() << " final -ELBO " << rec.final_neg_elbo << " ("
            << rec.wall_seconds << " s) -> " << out.string() << "\n";
  return kExitOk;
}

int CmdProbe(Invocation& inv, const std::string& corpus_dir, const std::string& checkpoint) {
  ProbeConfig cfg;
  cfg.seed = inv.RequireSeed();
  RequireDir("corpus", corpus_dir);
  if (checkpoint.empty()) throw ConfigError("missing --checkpoint");
  try {
    cfg.task = ParseProbeTask(inv.config.GetString("task", "frame_classify"));
    const std::string layer = inv.config.GetString("layer", "all");
    cfg.layer = layer == "all" ? -1 : static_cast<int>(inv.config.GetInt("layer", -1));
    cfg.lr = inv.config.GetDouble("lr", cfg.lr);
    cfg.epochs = static_cast<int>(inv.config.GetInt("epochs", cfg.epochs));
    cfg.batch_frames = static_cast<int>(inv.config.GetInt("batch_frames", cfg.batch_frames));
    cfg.heldout_fraction = inv.config.GetDouble("heldout_fraction", cfg.heldout_fraction);
    cfg.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const bool cache = inv.config.GetBool("cache_features", false);
  for (const char* k : {"task", "layer", "lr", "epochs", "batch_frames", "heldout_fraction", "cache_features"}) {
    inv.config.Take(k);
  }
  inv.RejectUnknown();
  const Model model = LoadModel(CheckpointDir(checkpoint));
  if (cfg.layer > model.encoder.layers) {
    throw ConfigError("layer " + std::to_string(cfg.layer) + " exceeds encoder depth " +
                      std::to_string(model.encoder.layers));
  }
  const auto labeled = ReadLabeledCorpus(corpus_dir);
  std::ifstream sf(fs::path(corpus_dir) / "hmm_spec.json");
  if (!sf) throw std::runtime_error("missing hmm_spec.json in " + corpus_dir);
  const HmmSpec spec = HmmSpec::FromJson(nlohmann::json::parse(sf));
  const ProbeLabels labels = ProbeLabels::FromCorpus(labeled, spec.n_states);
  const auto frames = FramesOf(labeled);
  const fs::path out = PrepareOut(inv, ToString(cfg.task) + "-" + SeedName(inv));
  const ProbeReport rep = RunProbe(model, frames, labels, cfg);
  rep.Write(out);
  RunManifest m = inv.Manifest(cfg.ToJson());
  m.resolved_config["corpus"] = corpus_dir;
  m.resolved_config["checkpoint"] = checkpoint;
  m.artifacts = {{"report", (out / "probe.json").string()}, {"table", (out / "probe.csv").string()}};
  if (cache) {
    for (const LayerResult& r : rep.layers) {
      const fs::path dir = out / ("features_layer" + std::to_string(r.layer));
      ExtractFeatures(model, frames, r.layer, dir);
      m.artifacts["features_layer" + std::to_string(r.layer)] = dir.string();
    }
  }
  m.Write(out);
  std::cout << "probe: raw " << rep.baseline.error << ", best layer " << rep.best_layer << " "
            << rep.best_error << " -> " << out.string() << "\n";
  return kExitOk;
}

int CmdCompare(Invocation& inv, const std::vector<std::string>& runs) {
  inv.RejectUnknown();
  if (runs.empty()) throw ConfigError("compare needs at least one --run");
  std::vector<RunRecord> records;
  for (const auto& r : runs) {
    RequireDir("run", r);
    records.push_back(RunRecord::Load(r));
  }
  ComparisonReport rep;
  try {
    rep = CompareRuns(records);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  const fs::path out = PrepareOut(inv, "report");
  rep.Write(out);
  RunManifest m = inv.Manifest({{"runs", runs}});
  m.artifacts = {{"report", (out / "comparison.json").string()},
                 {"table", (out / "comparison.csv").string()}};
  m.Write(out);
  for (const auto& s : rep.labels) {
    std::cout << s.label << ": mean final -ELBO " << s.mean_final << " over " << s.finals.size()
              << " run(s), mean first-step loss " << s.mean_first << "\n";
  }
  return kExitOk;
}

int CmdGradcheck(Invocation& inv) {
  const std::uint64_t seed = inv.RequireSeed();
  num::GradCheckOptions opt;
  opt.tolerance = inv.config.GetDouble("tolerance", opt.tolerance);
  opt.step = inv.config.GetDouble("step", opt.step);
  opt.coords_per_tensor = static_cast<int>(inv.config.GetInt("coords_per_tensor", opt.coords_per_tensor));
  for (const char* k : {"tolerance", "step", "coords_per_tensor"}) inv.config.Take(k);
  inv.RejectUnknown();
  const auto cases = GradientSuite(seed, opt);
  const fs::path out = PrepareOut(inv, SeedName(inv));
  std::ofstream(out / "gradcheck.json") << ToJson(cases).dump(2) << "\n";
  RunManifest m = inv.Manifest({{"tolerance", opt.tolerance},
                                {"step", opt.step},
                                {"coords_per_tensor", opt.coords_per_tensor}});
  m.artifacts = {{"report", (out / "gradcheck.json").string()}};
  m.Write(out);
  bool ok = true;
  for (const auto& c : cases) {
    std::cout << (c.report.pass ? "PASS " : "FAIL ") << c.name << " worst relative error "
              << c.report.worst() << "\n";
    ok = ok && c.report.pass;
  }
  if (!ok) throw std::runtime_error("gradient check failed");
  return kExitOk;
}

int CmdBoundcheck(Invocation& inv, const std::string& checkpoint, const std::string& corpus_dir) {
  const std::uint64_t seed = inv.RequireSeed();
  if (checkpoint.empty()) throw ConfigError("missing --checkpoint");
  RequireDir("corpus", corpus_dir);
  Model model = LoadModel(CheckpointDir(checkpoint));
  const nlohmann::json train = model.config.value("train", nlohmann::json::object());
  if (train.value("second_iteration", false)) {
    throw ConfigError("boundcheck needs a first-iteration checkpoint");
  }
  const double tau = inv.config.GetDouble("tau", train.value("tau", 1.0));
  const auto max_utts = inv.config.GetInt("max_utterances", 50);
  const double tol = inv.config.GetDouble("tolerance", 1e-9);
  for (const char* k : {"tau", "max_utterances", "tolerance"}) inv.config.Take(k);
  inv.RejectUnknown();
  if (!model.params.Contains("codebook")) throw std::runtime_error("checkpoint has no codebook");
  const auto corpus = ReadCorpus(corpus_dir);
  MaskSpec spec;
  spec.span_frames = static_cast<int>(train.value("mask.span", 4));
  spec.start_prob = train.value("mask.start_prob", 0.2);
  Rng rng(DeriveSeed(seed, "mask"));
  std::vector<double> gaps;
  for (std::size_t i = 0; i < corpus.size() && static_cast<std::int64_t>(i) < max_utts; ++i) {
    const Matrix x = Normalize(corpus[i].frames, model.input_stats);
    if (x.rows() < spec.span_frames) continue;
    const Partition part = SampleMask(x.rows(), spec, rng);
    gaps.push_back(BoundGap(model.encoder, model.params, x, x, part, tau));
  }
  const BoundCheckSummary s = SummarizeGaps(gaps, tol);
  const fs::path out = PrepareOut(inv, SeedName(inv));
  std::ofstream(out / "boundcheck.json") << s.ToJson().dump(2) << "\n";
  RunManifest m = inv.Manifest({{"tau", tau},
                                {"max_utterances", max_utts},
                                {"tolerance", tol},
                                {"checkpoint", checkpoint},
                                {"corpus", corpus_dir}});
  m.artifacts = {{"report", (out / "boundcheck.json").string()}};
  m.Write(out);
  std::cout << "boundcheck: " << s.evaluations << " utterances, gap min " << s.min_gap << " mean "
            << s.mean_gap << " max " << s.max_gap << (s.pass ? " PASS" : " FAIL") << "\n";
  if (!s.pass) throw std::runtime_error("negative ELBO gap below tolerance");
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char* const* argv) {
  CLI::App app{"vpc: variational predictive coding experiments"};
  app.set_version_flag("--version", ToolVersion());
  app.require_subcommand(1);

  Common common;
  std::string input, corpus, checkpoint, teacher, objective, estimator, codebook_init;
  std::vector<std::string> runs;
  auto add_common = [&](CLI::App* sub, bool out = true) {
    sub->add_option("--config", common.config_path, "key = value config file");
    sub->add_option("--set", common.sets, "override a config key (key=value)");
    sub->add_option("--seed", common.seed, "run seed");
    if (out) sub->add_option("--out", common.out, "output directory");
  };
  CLI::App* features = app.add_subcommand("features", "log-mel features from a directory of wav files");
  add_common(features);
  features->add_option("--input", input, "directory of .wav files")->required();
  CLI::App* synth = app.add_subcommand("synth", "sample a labelled synthetic HMM corpus");
  add_common(synth);
  CLI::App* kmeans = app.add_subcommand("kmeans", "fit a k-means codebook on a corpus");
  add_common(kmeans);
  kmeans->add_option("--corpus", corpus, "feature corpus directory")->required();
  CLI::App* pretrain = app.add_subcommand("pretrain", "pre-train an encoder");
  add_common(pretrain);
  pretrain->add_option("--corpus", corpus, "feature corpus directory")->required();
  pretrain->add_option("--objective", objective, "hubert_obj, masked_vpc, future_vpc or masked_nce");
  pretrain->add_option("--estimator", estimator, "single_point, marginal or gumbel");
  pretrain->add_option("--codebook-init", codebook_init, "kmeans++ or random");
  CLI::App* second = app.add_subcommand("second-iter", "train on targets from a frozen teacher");
  add_common(second);
  second->add_option("--corpus", corpus, "feature corpus directory")->required();
  second->add_option("--teacher", teacher, "teacher run or checkpoint directory")->required();
  CLI::App* probe = app.add_subcommand("probe", "linear probes on frozen representations");
  add_common(probe);
  probe->add_option("--corpus", corpus, "labelled synthetic corpus directory")->required();
  probe->add_option("--checkpoint", checkpoint, "run or checkpoint directory")->required();
  CLI::App* compare = app.add_subcommand("compare", "compare pre-training runs");
  add_common(compare);
  compare->add_option("--run", runs, "run directory (repeatable)")->required();
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(gradcheck);
  CLI::App* boundcheck = app.add_subcommand("boundcheck", "compare -ELBO with the exact likelihood");
  add_common(boundcheck);
  boundcheck->add_option("--checkpoint", checkpoint, "run or checkpoint directory")->required();
  boundcheck->add_option("--corpus", corpus, "feature corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  Invocation inv;
  inv.command = app.get_subcommands().front()->get_name();
  inv.common = common;
  for (int i = 0; i < argc; ++i) inv.argv.emplace_back(argv[i]);
  fs::path error_dir = common.out;
  try {
    if (!common.config_path.empty()) inv.config = KeyValueConfig::Load(common.config_path);
    for (const auto& s : common.sets) inv.config.Override(s);
    if (inv.command == "features") return CmdFeatures(inv, input);
    if (inv.command == "synth") return CmdSynth(inv);
    if (inv.command == "kmeans") return CmdKmeans(inv, corpus);
    if (inv.command == "pretrain") {
      if (!objective.empty()) inv.config.Set("objective", objective);
      if (!estimator.empty()) inv.config.Set("estimator", estimator);
      if (!codebook_init.empty()) inv.config.Set("codebook_init", codebook_init);
      return Train(inv, corpus, BuildTrainConfig(inv));
    }
    if (inv.command == "second-iter") {
      inv.config.Set("second_iteration", "true");
      inv.config.Set("second.teacher", CheckpointDir(teacher).string());
      return Train(inv, corpus, BuildTrainConfig(inv));
    }
    if (inv.command == "probe") return CmdProbe(inv, corpus, checkpoint);
    if (inv.command == "compare") return CmdCompare(inv, runs);
    if (inv.command == "gradcheck") return CmdGradcheck(inv);
    if (inv.command == "boundcheck") return CmdBoundcheck(inv, checkpoint, corpus);
  } catch (const ConfigError& e) {
    ReportError(error_dir, inv.command, kExitConfig, "config", e.what());
    return kExitConfig;
  } catch (const num::NonFiniteError& e) {
    ReportError(error_dir, inv.command, kExitRuntime, "non_finite", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    ReportError(error_dir, inv.command, kExitRuntime, "runtime", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace vpc::cli

#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <vector>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "shadowprobe/attack.h"
#include "shadowprobe/datagen.h"
#include "shadowprobe/error.h"
#include "shadowprobe/model.h"
#include "shadowprobe/parallel.h"

namespace shadowprobe::tools {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kManifest = "manifest.json";

void Info(const std::string& msg) { spdlog::info("{}", msg); }

fs::path EnsureOut(const PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create '" + cfg.out_dir.string() + "': " + ec.message());
  return cfg.out_dir;
}

std::string ShadowName(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shadow_%03zu%s", i, ext);
  return buf;
}

struct ManifestEntry {
  std::string file;
  Property label = Property::kNotP;
  std::uint64_t seed = 0;
};

void WriteManifest(const fs::path& dir, const PipelineConfig& cfg,
                   const std::vector<ManifestEntry>& entries) {
  Json items = Json::array();
  for (const auto& e : entries) {
    items.push_back({{"file", e.file}, {"label", ToString(e.label)}, {"seed", e.seed}});
  }
  Json j = {{"kind", "shadow_manifest"},
            {"format_version", kFormatVersion},
            {"case", ToString(cfg.case_kind)},
            {"seed", cfg.seed},
            {"entries", std::move(items)}};
  WriteTextFile(dir / kManifest, j.dump(2) + "\n");
}

std::vector<ManifestEntry> ReadManifest(const fs::path& dir) {
  Json j;
  try {
    j = Json::parse(ReadTextFile(dir / kManifest));
    if (j.at("kind") != "shadow_manifest") throw KindError("not a shadow manifest");
    if (j.at("format_version") != kFormatVersion) {
      throw VersionError("unsupported manifest format_version");
    }
    std::vector<ManifestEntry> out;
    for (const auto& e : j.at("entries")) {
      out.push_back({e.at("file").get<std::string>(),
                     PropertyFromString(e.at("label").get<std::string>()),
                     e.at("seed").get<std::uint64_t>()});
    }
    return out;
  } catch (const Json::exception& e) {
    throw StructuralError(std::string("malformed manifest: ") + e.what());
  }
}

Dataset CorpusToDataset(const SpeechCorpus& corpus, std::size_t dim) {
  std::vector<Attribute> schema = {{"phoneme", AttributeKind::kCategorical},
                                   {"sequence", AttributeKind::kNumeric},
                                   {"frame", AttributeKind::kNumeric}};
  for (std::size_t d = 0; d < dim; ++d) {
    schema.push_back({"f" + std::to_string(d), AttributeKind::kNumeric});
  }
  std::vector<Instance> rows;
  for (const auto& [ph, seqs] : corpus) {
    for (std::size_t s = 0; s < seqs.size(); ++s) {
      for (std::size_t t = 0; t < seqs[s].frames.size(); ++t) {
        Instance inst;
        inst.values.emplace_back(ph);
        inst.values.emplace_back(static_cast<double>(s));
        inst.values.emplace_back(static_cast<double>(t));
        for (double v : seqs[s].frames[t]) inst.values.emplace_back(v);
        rows.push_back(std::move(inst));
      }
    }
  }
  return Dataset(std::move(schema), std::move(rows));
}

void Print(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

PipelineConfig ResolveConfig(const CommonFlags& flags) {
  PipelineConfig cfg = flags.config ? LoadPipelineConfig(*flags.config) : PipelineConfig{};
  if (flags.case_name) cfg.case_kind = PipelineCaseFromString(*flags.case_name);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out) cfg.out_dir = *flags.out;
  if (flags.jobs) cfg.jobs = *flags.jobs;
  if (flags.shadows) {
    switch (cfg.case_kind) {
      case PipelineCase::kSpeech:
        cfg.speech.n_shadows = *flags.shadows;
        break;
      case PipelineCase::kNetflow:
        cfg.netflow.n_shadows = *flags.shadows;
        break;
      case PipelineCase::kDpBypass:
        cfg.dp_bypass.attack.n_runs = *flags.shadows;
        break;
      case PipelineCase::kMlpDemo:
        break;
    }
  }
  if (flags.top_k) cfg.speech.top_k = *flags.top_k;
  if (flags.sigma) cfg.dp_bypass.attack.sulq.sigma = *flags.sigma;
  ValidatePipelineConfig(cfg);
  return cfg;
}

int RunCommand(const CommonFlags& flags) {
  const PipelineConfig cfg = ResolveConfig(flags);
  spdlog::info("running case {} with seed {}", ToString(cfg.case_kind), cfg.seed);
  const PipelineResult r = RunPipeline(cfg, Info);
  for (const auto& f : r.files) spdlog::info("wrote {}", f.string());
  if (!r.ok) {
    spdlog::error("pipeline failed: {}", r.error);
    return 1;
  }
  return 0;
}

int GenerateCommand(const CommonFlags& flags) {
  const PipelineConfig cfg = ResolveConfig(flags);
  const fs::path out = EnsureOut(cfg);
  RandomSource rng(cfg.seed);
  std::vector<ManifestEntry> entries;
  switch (cfg.case_kind) {
    case PipelineCase::kNetflow: {
      const auto& c = cfg.netflow;
      const auto shadows =
          GenShadowArray(c.spec, c.n_shadows, c.balance, c.flows_per_shadow, rng);
      for (std::size_t i = 0; i < shadows.size(); ++i) {
        const std::string name = ShadowName(i, ".csv");
        SaveDataset(shadows[i].data, out / name);
        entries.push_back({name, shadows[i].label.value, shadows[i].seed});
      }
      break;
    }
    case PipelineCase::kSpeech: {
      const auto& c = cfg.speech;
      RandomSource spec_rng = rng.Split();
      const SpeechSpec spec = MakeSpeechSpec(c.spec, spec_rng);
      RandomSource shadow_rng = rng.Split();
      const auto shadows =
          GenShadowArray(spec, c.n_shadows, c.balance, c.sequences_per_phoneme, shadow_rng);
      for (std::size_t i = 0; i < shadows.size(); ++i) {
        const std::string name = ShadowName(i, ".csv");
        SaveDataset(CorpusToDataset(shadows[i].data, spec.dim), out / name);
        entries.push_back({name, shadows[i].label.value, shadows[i].seed});
      }
      break;
    }
    default:
      throw ConfigError("case", "generate supports the speech and netflow cases");
  }
  WriteManifest(out, cfg, entries);
  spdlog::info("wrote {} shadow datasets to {}", entries.size(), out.string());
  return 0;
}

int TrainCommand(const CommonFlags& flags) {
  const PipelineConfig cfg = ResolveConfig(flags);
  const fs::path out = EnsureOut(cfg);
  RandomSource rng(cfg.seed);
  std::vector<ManifestEntry> entries;
  std::vector<TrainedModel> models;
  switch (cfg.case_kind) {
    case PipelineCase::kNetflow: {
      const auto& c = cfg.netflow;
      RandomSource shadow_rng = rng.Split();
      const auto shadows =
          GenShadowArray(c.spec, c.n_shadows, c.balance, c.flows_per_shadow, shadow_rng);
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = 0; i < shadows.size(); ++i) seeds.push_back(rng.SplitSeed());
      models.resize(shadows.size());
      ParallelFor(shadows.size(), cfg.jobs, [&](std::size_t i) {
        RandomSource r(seeds[i]);
        models[i] = SmoTrain(FlowFeatures(shadows[i].data), c.kernel, c.smo, r);
      });
      for (std::size_t i = 0; i < shadows.size(); ++i) {
        entries.push_back({ShadowName(i, ".json"), shadows[i].label.value, shadows[i].seed});
      }
      break;
    }
    case PipelineCase::kSpeech: {
      const auto& c = cfg.speech;
      RandomSource spec_rng = rng.Split();
      const SpeechSpec spec = MakeSpeechSpec(c.spec, spec_rng);
      RandomSource shadow_rng = rng.Split();
      const auto shadows =
          GenShadowArray(spec, c.n_shadows, c.balance, c.sequences_per_phoneme, shadow_rng);
      models.resize(shadows.size());
      ParallelFor(shadows.size(), cfg.jobs, [&](std::size_t i) {
        models[i] = TrainAcousticModel(shadows[i].data, spec.n_states, c.viterbi_iters,
                                       c.baum_welch_iters, c.var_floor);
      });
      for (std::size_t i = 0; i < shadows.size(); ++i) {
        entries.push_back({ShadowName(i, ".json"), shadows[i].label.value, shadows[i].seed});
      }
      break;
    }
    default:
      throw ConfigError("case", "train supports the speech and netflow cases");
  }
  for (std::size_t i = 0; i < models.size(); ++i) SaveModel(models[i], out / entries[i].file);
  WriteManifest(out, cfg, entries);
  spdlog::info("wrote {} shadow models to {}", models.size(), out.string());
  return 0;
}

int AttackCommand(const CommonFlags& flags, const fs::path& models_dir,
                  const std::optional<fs::path>& target) {
  const PipelineConfig cfg = ResolveConfig(flags);
  const auto entries = ReadManifest(models_dir);
  std::vector<LabeledModel> shadows;
  for (const auto& e : entries) shadows.push_back({LoadModel(models_dir / e.file), e.label});
  const MetaDataset md = BuildMetaTrainingSet(shadows);
  const TreeParams& tree =
      md.source_kind == ModelKind::kHmm ? cfg.speech.tree : cfg.netflow.tree;
  RandomSource rng(cfg.seed);
  const MetaClassifier mc = TrainMeta(md, tree, rng);
  const fs::path out = EnsureOut(cfg);
  WriteTextFile(out / "meta_classifier.json", SerializeMetaClassifier(mc));
  Json summary = {{"meta_rows", md.data.size()},
                  {"tree_nodes", mc.tree.NodeCount()},
                  {"tree_leaves", mc.tree.LeafCount()},
                  {"training_accuracy", mc.training_accuracy}};
  if (target) {
    const PropertyVerdict v = InferProperty(mc, LoadModel(*target));
    summary["verdict"] = {{"label", ToString(v.label.value)},
                          {"votes_p", v.votes_p},
                          {"votes_notp", v.votes_notp},
                          {"tie", v.tie},
                          {"aggregation", v.label.description}};
  }
  Print(summary);
  return 0;
}

int FilterCommand(const CommonFlags& flags, const fs::path& reference,
                  const fs::path& baselines_dir) {
  const PipelineConfig cfg = ResolveConfig(flags);
  auto as_acoustic = [](const fs::path& p) {
    TrainedModel m = LoadModel(p);
    if (KindOf(m) != ModelKind::kHmm) {
      throw KindError("'" + p.string() + "' is not an acoustic model");
    }
    return std::get<AcousticModel>(std::move(m));
  };
  const AcousticModel ref = as_acoustic(reference);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(baselines_dir)) {
    if (e.path().extension() == ".json" && e.path().filename() != kManifest) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<AcousticModel> baselines;
  for (const auto& f : files) baselines.push_back(as_acoustic(f));
  const auto scores = PhonemeDivergences(ref, baselines);
  const std::size_t k = std::min(cfg.speech.top_k, scores.size());
  Json top = Json::array();
  for (std::size_t i = 0; i < k; ++i) top.push_back(scores[i].phoneme);
  Json all = Json::array();
  for (const auto& s : scores) all.push_back({{"phoneme", s.phoneme}, {"score", s.score}});
  Print({{"top_k", k}, {"selected", top}, {"baselines", baselines.size()}, {"scores", all}});
  return 0;
}

int EvaluateCommand(const CommonFlags& flags, const fs::path& meta,
                    const fs::path& models_dir) {
  ResolveConfig(flags);
  const MetaClassifier mc = DeserializeMetaClassifier(ReadTextFile(meta));
  std::vector<std::string> truths, preds;
  std::size_t correct = 0;
  const auto entries = ReadManifest(models_dir);
  Json verdicts = Json::array();
  for (const auto& e : entries) {
    const PropertyVerdict v = InferProperty(mc, LoadModel(models_dir / e.file));
    for (Property p : v.per_row) {
      truths.push_back(ToString(e.label));
      preds.push_back(ToString(p));
    }
    correct += v.label.value == e.label;
    verdicts.push_back({{"file", e.file},
                        {"truth", ToString(e.label)},
                        {"verdict", ToString(v.label.value)},
                        {"votes_p", v.votes_p},
                        {"votes_notp", v.votes_notp},
                        {"tie", v.tie}});
  }
  const ConfusionMatrix cm =
      MakeConfusionMatrix(truths, preds, {kLabelNotP, kLabelP});
  const Metrics m = ComputeMetrics(cm);
  Json per_class = Json::object();
  for (const auto& c : m.per_class) {
    per_class[c.label] = {{"precision", c.precision}, {"recall", c.recall}};
  }
  Print({{"confusion_matrix", {{"labels", cm.labels}, {"counts", cm.counts}}},
         {"row_accuracy", m.accuracy},
         {"per_class", per_class},
         {"verdicts_correct", correct},
         {"verdicts", verdicts}});
  return 0;
}

}  // namespace shadowprobe::tools

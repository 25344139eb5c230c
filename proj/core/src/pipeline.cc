#include "shadowprobe/pipeline.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "json_io.h"
#include "shadowprobe/error.h"
#include "shadowprobe/parallel.h"

namespace shadowprobe {

using json_io::Json;

namespace {

// ------------------------------------------------------------ config reading

class Reader {
 public:
  Reader(const Json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(Name(), "must be an object");
  }

  std::string Field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* Find(const char* key) {
    used_.insert(key);
    if (!j_ || !j_->contains(key)) return nullptr;
    return &j_->at(key);
  }

  void Size(const char* key, std::size_t& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                      v->get<std::int64_t>() < 0)) {
        throw ConfigError(Field(key), "expected a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }
  void U64(const char* key, std::uint64_t& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number_unsigned() &&
          !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        throw ConfigError(Field(key), "expected an unsigned 64-bit integer");
      }
      out = v->get<std::uint64_t>();
    }
  }
  void Int(const char* key, int& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number_integer()) throw ConfigError(Field(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void Real(const char* key, double& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_number()) throw ConfigError(Field(key), "expected a number");
      out = v->get<double>();
    }
  }
  void Bool(const char* key, bool& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_boolean()) throw ConfigError(Field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void String(const char* key, std::string& out) {
    if (const Json* v = Find(key)) {
      if (!v->is_string()) throw ConfigError(Field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void OptionalSize(const char* key, std::optional<std::size_t>& out) {
    if (const Json* v = Find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      std::size_t s = 0;
      Size(key, s);
      out = s;
    }
  }
  Reader Child(const char* key) { return Reader(Find(key), Field(key)); }

  // Rejects keys nobody asked for.
  void Finish() const {
    if (!j_) return;
    for (const auto& [key, value] : j_->items()) {
      if (!used_.contains(key)) throw ConfigError(Field(key.c_str()), "unknown field");
    }
  }

 private:
  std::string Name() const { return path_.empty() ? "config" : path_; }

  const Json* j_;
  std::string path_;
  std::set<std::string> used_;
};

void ReadTree(Reader r, TreeParams& t) {
  r.Size("min_leaf_size", t.min_leaf_size);
  r.OptionalSize("max_depth", t.max_depth);
  r.Finish();
}

void ReadMode(Reader r, FlowMode& m) {
  r.Real("duration_median", m.duration_median);
  r.Real("duration_sigma", m.duration_sigma);
  r.Real("packets_median", m.packets_median);
  r.Real("packets_sigma", m.packets_sigma);
  r.Real("bytes_per_packet", m.bytes_per_packet);
  r.Real("bytes_per_packet_sigma", m.bytes_per_packet_sigma);
  r.Finish();
}

void ReadFlowSpec(Reader r, FlowSpec& s) {
  ReadMode(r.Child("news"), s.news);
  ReadMode(r.Child("ads"), s.ads);
  ReadMode(r.Child("signature"), s.signature);
  ReadMode(r.Child("dns"), s.dns);
  r.Real("news_fraction", s.news_fraction);
  r.Real("signature_fraction", s.signature_fraction);
  r.Real("https_fraction", s.https_fraction);
  r.Real("dns_udp_fraction", s.dns_udp_fraction);
  r.Finish();
}

void ReadSpeech(Reader r, SpeechConfig& c) {
  {
    Reader s = r.Child("spec");
    s.Size("n_phonemes", c.spec.n_phonemes);
    s.Size("dim", c.spec.dim);
    s.Size("n_states", c.spec.n_states);
    s.Real("mean_spread", c.spec.mean_spread);
    s.Real("var_low", c.spec.var_low);
    s.Real("var_high", c.spec.var_high);
    s.Size("n_shifted", c.spec.n_shifted);
    s.Real("shift_sigma", c.spec.shift_sigma);
    s.Real("var_scale", c.spec.var_scale);
    s.Size("min_frames_per_state", c.spec.min_frames_per_state);
    s.Size("max_frames_per_state", c.spec.max_frames_per_state);
    s.Finish();
  }
  r.Size("n_shadows", c.n_shadows);
  r.Real("balance", c.balance);
  r.Size("sequences_per_phoneme", c.sequences_per_phoneme);
  r.Size("viterbi_iters", c.viterbi_iters);
  r.Size("baum_welch_iters", c.baum_welch_iters);
  r.Real("var_floor", c.var_floor);
  r.Real("train_fraction", c.train_fraction);
  r.Size("n_baselines", c.n_baselines);
  r.Size("reference_sequences_per_phoneme", c.reference_sequences_per_phoneme);
  r.Size("top_k", c.top_k);
  r.Bool("shuffle_labels", c.shuffle_labels);
  ReadTree(r.Child("tree"), c.tree);
  r.Finish();
}

void ReadNetflow(Reader r, NetflowConfig& c) {
  ReadFlowSpec(r.Child("spec"), c.spec);
  r.Size("n_shadows", c.n_shadows);
  r.Real("balance", c.balance);
  r.Size("flows_per_shadow", c.flows_per_shadow);
  {
    Reader k = r.Child("kernel");
    std::string kind = ToString(c.kernel.kind);
    k.String("kind", kind);
    try {
      c.kernel.kind = KernelKindFromString(kind);
    } catch (const KindError& e) {
      throw ConfigError(k.Field("kind"), e.what());
    }
    k.Real("gamma", c.kernel.gamma);
    k.Real("r", c.kernel.r);
    k.Int("degree", c.kernel.degree);
    k.Finish();
  }
  {
    Reader s = r.Child("smo");
    s.Real("C", c.smo.C);
    s.Real("tol", c.smo.tol);
    s.Size("max_passes", c.smo.max_passes);
    s.Size("max_total_passes", c.smo.max_total_passes);
    s.Finish();
  }
  r.Size("folds", c.folds);
  r.Size("n_targets", c.n_targets);
  r.Bool("shuffle_labels", c.shuffle_labels);
  ReadTree(r.Child("tree"), c.tree);
  r.Finish();
}

void ReadDp(Reader r, DpBypassConfig& c) {
  ReadFlowSpec(r.Child("spec"), c.spec);
  r.Size("pool_size", c.pool_size);
  r.Size("k", c.attack.k);
  r.Size("n_runs", c.attack.n_runs);
  r.Size("points_per_run", c.attack.points_per_run);
  r.Size("max_iters", c.attack.max_iters);
  r.Real("sigma", c.attack.sulq.sigma);
  if (const Json* clamp = r.Find("clamp")) {
    const std::string field = r.Field("clamp");
    if (!clamp->is_array()) throw ConfigError(field, "expected [[low, high], ...]");
    c.attack.sulq.clamp.clear();
    for (const auto& pair : *clamp) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
          !pair[1].is_number()) {
        throw ConfigError(field, "expected [[low, high], ...]");
      }
      c.attack.sulq.clamp.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
  }
  r.Size("folds", c.attack.folds);
  ReadTree(r.Child("tree"), c.attack.tree);
  r.Finish();
}

void ReadMlp(Reader r, MlpDemoConfig& c) {
  r.Size("hidden", c.hidden);
  r.Real("learning_rate", c.learning_rate);
  r.Size("epochs", c.epochs);
  r.Size("n_seeds", c.n_seeds);
  r.Real("low_target", c.low_target);
  r.Real("high_target", c.high_target);
  r.Finish();
}

void Require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void ValidateTree(const TreeParams& t, const std::string& path) {
  Require(t.min_leaf_size >= 1, path + ".min_leaf_size", "must be >= 1");
  Require(!t.max_depth || *t.max_depth >= 1, path + ".max_depth", "must be >= 1");
}

void ValidateFlowSpec(const FlowSpec& s, const std::string& path) {
  try {
    s.Validate();
  } catch (const ContractError& e) {
    throw ConfigError(path, e.what());
  }
}

// ------------------------------------------------------------ config echo

Json TreeJson(const TreeParams& t) {
  Json j = {{"min_leaf_size", t.min_leaf_size}};
  j["max_depth"] = t.max_depth ? Json(*t.max_depth) : Json(nullptr);
  j["criterion"] = "information gain";
  return j;
}

Json ModeJson(const FlowMode& m) {
  return {{"duration_median", m.duration_median},
          {"duration_sigma", m.duration_sigma},
          {"packets_median", m.packets_median},
          {"packets_sigma", m.packets_sigma},
          {"bytes_per_packet", m.bytes_per_packet},
          {"bytes_per_packet_sigma", m.bytes_per_packet_sigma}};
}

Json FlowSpecJson(const FlowSpec& s) {
  return {{"news", ModeJson(s.news)},
          {"ads", ModeJson(s.ads)},
          {"signature", ModeJson(s.signature)},
          {"dns", ModeJson(s.dns)},
          {"news_fraction", s.news_fraction},
          {"signature_fraction", s.signature_fraction},
          {"https_fraction", s.https_fraction},
          {"dns_udp_fraction", s.dns_udp_fraction}};
}

Json SpeechJson(const SpeechConfig& c) {
  const auto& p = c.spec;
  return {{"spec",
           {{"n_phonemes", p.n_phonemes},
            {"dim", p.dim},
            {"n_states", p.n_states},
            {"mean_spread", p.mean_spread},
            {"var_low", p.var_low},
            {"var_high", p.var_high},
            {"n_shifted", p.n_shifted},
            {"shift_sigma", p.shift_sigma},
            {"var_scale", p.var_scale},
            {"min_frames_per_state", p.min_frames_per_state},
            {"max_frames_per_state", p.max_frames_per_state}}},
          {"n_shadows", c.n_shadows},
          {"balance", c.balance},
          {"sequences_per_phoneme", c.sequences_per_phoneme},
          {"viterbi_iters", c.viterbi_iters},
          {"baum_welch_iters", c.baum_welch_iters},
          {"var_floor", c.var_floor},
          {"emitting_states", p.n_states},
          {"covariance", "diagonal, one Gaussian per state"},
          {"train_fraction", c.train_fraction},
          {"n_baselines", c.n_baselines},
          {"reference_sequences_per_phoneme", c.reference_sequences_per_phoneme},
          {"top_k", c.top_k},
          {"divergence_aggregation", "mean over (state, dimension), then over baselines"},
          {"shuffle_labels", c.shuffle_labels},
          {"tree", TreeJson(c.tree)}};
}

Json NetflowJson(const NetflowConfig& c) {
  return {{"spec", FlowSpecJson(c.spec)},
          {"n_shadows", c.n_shadows},
          {"balance", c.balance},
          {"flows_per_shadow", c.flows_per_shadow},
          {"kernel",
           {{"kind", ToString(c.kernel.kind)},
            {"gamma", c.kernel.gamma},
            {"r", c.kernel.r},
            {"degree", c.kernel.degree}}},
          {"smo",
           {{"C", c.smo.C},
            {"tol", c.smo.tol},
            {"max_passes", c.smo.max_passes},
            {"max_total_passes", c.smo.max_total_passes},
            {"variant", "simplified SMO, random second index"}}},
          {"feature_scaling", "log-scaled flow fields, see FlowFeatures"},
          {"folds", c.folds},
          {"fold_assignment", "stratified"},
          {"n_targets", c.n_targets},
          {"shuffle_labels", c.shuffle_labels},
          {"tree", TreeJson(c.tree)}};
}

Json DpJson(const DpBypassConfig& c) {
  Json clamp = Json::array();
  for (const auto& [lo, hi] : c.attack.sulq.clamp) clamp.push_back({lo, hi});
  return {{"spec", FlowSpecJson(c.spec)},
          {"pool_size", c.pool_size},
          {"features", {"duration", "bytes"}},
          {"k", c.attack.k},
          {"n_runs", c.attack.n_runs},
          {"points_per_run", c.attack.points_per_run},
          {"max_iters", c.attack.max_iters},
          {"sigma", c.attack.sulq.sigma},
          {"clamp", clamp.empty() ? Json("observed range of both pools") : clamp},
          {"noise_placement", "per-cluster per-dimension sums and counts"},
          {"folds", c.attack.folds},
          {"fold_unit", "model"},
          {"tree", TreeJson(c.attack.tree)}};
}

Json MlpJson(const MlpDemoConfig& c) {
  return {{"hidden", c.hidden},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"n_seeds", c.n_seeds},
          {"low_target", c.low_target},
          {"high_target", c.high_target},
          {"init", "uniform [-0.5, 0.5]"},
          {"activation", "1 / (1 + exp(-x))"}};
}

Json ConfigJson(const PipelineConfig& cfg) {
  Json j;
  j["case"] = ToString(cfg.case_kind);
  j["seed"] = cfg.seed;
  j["aggregation"] = "majority vote over extracted rows; tie -> NotP";
  switch (cfg.case_kind) {
    case PipelineCase::kSpeech:
      j["speech"] = SpeechJson(cfg.speech);
      break;
    case PipelineCase::kNetflow:
      j["netflow"] = NetflowJson(cfg.netflow);
      break;
    case PipelineCase::kDpBypass:
      j["dp_bypass"] = DpJson(cfg.dp_bypass);
      break;
    case PipelineCase::kMlpDemo:
      j["mlp_demo"] = MlpJson(cfg.mlp_demo);
      break;
  }
  return j;
}

// ------------------------------------------------------------ report pieces

Json ConfusionJson(const ConfusionMatrix& cm) {
  return {{"orientation", "rows = truth, columns = prediction"},
          {"labels", cm.labels},
          {"counts", cm.counts}};
}

Json MetricsJson(const Metrics& m) {
  Json per_class = Json::object();
  for (const auto& c : m.per_class) {
    per_class[c.label] = {{"precision", c.precision},
                          {"recall", c.recall},
                          {"precision_undefined", c.precision_undefined}};
  }
  return {{"accuracy", m.accuracy}, {"per_class", std::move(per_class)}};
}

Json VerdictJson(const PropertyVerdict& v, Property truth) {
  return {{"truth", ToString(truth)},
          {"verdict", ToString(v.label.value)},
          {"votes_p", v.votes_p},
          {"votes_notp", v.votes_notp},
          {"tie", v.tie}};
}

Json HoldoutJson(const HoldoutResult& h) {
  Json verdicts = Json::array();
  for (std::size_t i = 0; i < h.verdicts.size(); ++i) {
    verdicts.push_back(VerdictJson(h.verdicts[i], h.truths[i]));
  }
  return {{"train_rows", h.train_rows},
          {"test_rows", h.test_rows},
          {"tree_nodes", h.tree_nodes},
          {"tree_leaves", h.tree_leaves},
          {"training_accuracy", h.training_accuracy},
          {"confusion_matrix", ConfusionJson(h.confusion)},
          {"metrics", MetricsJson(h.metrics)},
          {"verdict_accuracy", h.verdict_accuracy},
          {"verdicts", std::move(verdicts)}};
}

Json ModelCvJson(const ModelCvResult& r) {
  return {{"verdict_accuracy", r.verdict_accuracy},
          {"row_accuracy", r.row_accuracy},
          {"verdict_confusion_matrix", ConfusionJson(r.verdict_confusion)},
          {"row_confusion_matrix", ConfusionJson(r.row_confusion)}};
}

std::string DumpReport(const PipelineConfig& cfg, Json results) {
  Json j;
  j["kind"] = "attack_report";
  j["format_version"] = kFormatVersion;
  j["status"] = "ok";
  j["config"] = ConfigJson(cfg);
  j["results"] = std::move(results);
  return json_io::Dump(j);
}

void Log(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

template <typename Data>
std::vector<Property> ShadowLabels(const std::vector<Shadow<Data>>& shadows) {
  std::vector<Property> out;
  for (const auto& s : shadows) out.push_back(s.label.value);
  return out;
}

// Stratified split of shadow indices: train_fraction of each label (at least
// one, leaving at least one) goes to training.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> SplitShadows(
    const std::vector<Property>& labels, double train_fraction, RandomSource& rng) {
  std::vector<std::size_t> train, test;
  for (Property p : {Property::kP, Property::kNotP}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == p) idx.push_back(i);
    }
    rng.Shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    train.insert(train.end(), idx.begin(), idx.begin() + n_train);
    test.insert(test.end(), idx.begin() + n_train, idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

template <typename T>
std::vector<T> Pick(const std::vector<T>& items, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

}  // namespace

const char* ToString(PipelineCase c) {
  switch (c) {
    case PipelineCase::kSpeech:
      return "speech";
    case PipelineCase::kNetflow:
      return "netflow";
    case PipelineCase::kDpBypass:
      return "dp_bypass";
    case PipelineCase::kMlpDemo:
      return "mlp_demo";
  }
  return "?";
}

PipelineCase PipelineCaseFromString(const std::string& name) {
  for (PipelineCase c : {PipelineCase::kSpeech, PipelineCase::kNetflow,
                         PipelineCase::kDpBypass, PipelineCase::kMlpDemo}) {
    if (name == ToString(c)) return c;
  }
  throw ConfigError("case", "unknown case '" + name +
                                "' (expected speech, netflow, dp_bypass or mlp_demo)");
}

PipelineConfig ParsePipelineConfig(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  PipelineConfig cfg;
  Reader r(&j, "");
  std::string case_name = ToString(cfg.case_kind);
  r.String("case", case_name);
  cfg.case_kind = PipelineCaseFromString(case_name);
  r.U64("seed", cfg.seed);
  std::string out = cfg.out_dir.string();
  r.String("out", out);
  cfg.out_dir = out;
  r.Size("jobs", cfg.jobs);
  ReadSpeech(r.Child("speech"), cfg.speech);
  ReadNetflow(r.Child("netflow"), cfg.netflow);
  ReadDp(r.Child("dp_bypass"), cfg.dp_bypass);
  ReadMlp(r.Child("mlp_demo"), cfg.mlp_demo);
  r.Finish();
  ValidatePipelineConfig(cfg);
  return cfg;
}

PipelineConfig LoadPipelineConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const IoError& e) {
    throw ConfigError("config", e.what());
  }
  return ParsePipelineConfig(text);
}

void ValidatePipelineConfig(const PipelineConfig& cfg) {
  Require(!cfg.out_dir.empty(), "out", "must not be empty");
  {
    const SpeechConfig& c = cfg.speech;
    const auto& p = c.spec;
    Require(p.n_phonemes >= 1, "speech.spec.n_phonemes", "must be >= 1");
    Require(p.dim >= 1, "speech.spec.dim", "must be >= 1");
    Require(p.n_states >= 1, "speech.spec.n_states", "must be >= 1");
    Require(p.mean_spread >= 0.0, "speech.spec.mean_spread", "must be >= 0");
    Require(p.var_low > 0.0, "speech.spec.var_low", "must be > 0");
    Require(p.var_high >= p.var_low, "speech.spec.var_high", "must be >= var_low");
    Require(p.n_shifted <= p.n_phonemes, "speech.spec.n_shifted", "must be <= n_phonemes");
    Require(p.var_scale > 0.0, "speech.spec.var_scale", "must be > 0");
    Require(p.min_frames_per_state >= 1, "speech.spec.min_frames_per_state", "must be >= 1");
    Require(p.max_frames_per_state >= p.min_frames_per_state,
            "speech.spec.max_frames_per_state", "must be >= min_frames_per_state");
    Require(c.n_shadows >= 4, "speech.n_shadows", "must be >= 4");
    Require(c.balance > 0.0 && c.balance < 1.0, "speech.balance", "must lie in (0, 1)");
    Require(c.sequences_per_phoneme >= 1, "speech.sequences_per_phoneme", "must be >= 1");
    Require(c.var_floor > 0.0, "speech.var_floor", "must be > 0");
    Require(c.train_fraction > 0.0 && c.train_fraction < 1.0, "speech.train_fraction",
            "must lie in (0, 1)");
    Require(c.n_baselines >= 1, "speech.n_baselines", "must be >= 1");
    Require(c.reference_sequences_per_phoneme >= 1,
            "speech.reference_sequences_per_phoneme", "must be >= 1");
    Require(c.top_k >= 1 && c.top_k <= p.n_phonemes, "speech.top_k",
            "must lie in [1, n_phonemes]");
    ValidateTree(c.tree, "speech.tree");
  }
  {
    const NetflowConfig& c = cfg.netflow;
    ValidateFlowSpec(c.spec, "netflow.spec");
    Require(c.n_shadows >= 2, "netflow.n_shadows", "must be >= 2");
    Require(c.balance > 0.0 && c.balance < 1.0, "netflow.balance", "must lie in (0, 1)");
    Require(c.flows_per_shadow >= 2, "netflow.flows_per_shadow", "must be >= 2");
    try {
      c.kernel.Validate();
    } catch (const ContractError& e) {
      throw ConfigError("netflow.kernel", e.what());
    }
    Require(c.smo.C > 0.0, "netflow.smo.C", "must be > 0");
    Require(c.smo.tol > 0.0, "netflow.smo.tol", "must be > 0");
    Require(c.folds >= 2, "netflow.folds", "must be >= 2");
    Require(c.n_targets >= 2, "netflow.n_targets", "must be >= 2");
    ValidateTree(c.tree, "netflow.tree");
  }
  {
    const DpBypassConfig& c = cfg.dp_bypass;
    ValidateFlowSpec(c.spec, "dp_bypass.spec");
    Require(c.pool_size >= 2, "dp_bypass.pool_size", "must be >= 2");
    Require(c.attack.k >= 1, "dp_bypass.k", "must be >= 1");
    Require(c.attack.n_runs >= 1, "dp_bypass.n_runs", "must be >= 1");
    Require(c.attack.points_per_run >= c.attack.k, "dp_bypass.points_per_run",
            "must be >= k");
    Require(c.attack.sulq.sigma > 0.0, "dp_bypass.sigma", "must be > 0");
    Require(c.attack.sulq.clamp.empty() || c.attack.sulq.clamp.size() == 2,
            "dp_bypass.clamp", "needs one [low, high] per feature (2)");
    for (const auto& [lo, hi] : c.attack.sulq.clamp) {
      Require(lo < hi, "dp_bypass.clamp", "low must be < high");
    }
    Require(c.attack.folds >= 2 && c.attack.folds <= 2 * c.attack.n_runs,
            "dp_bypass.folds", "must lie in [2, 2 * n_runs]");
    ValidateTree(c.attack.tree, "dp_bypass.tree");
  }
  {
    const MlpDemoConfig& c = cfg.mlp_demo;
    Require(c.hidden >= 1, "mlp_demo.hidden", "must be >= 1");
    Require(c.learning_rate > 0.0, "mlp_demo.learning_rate", "must be > 0");
    Require(c.n_seeds >= 1, "mlp_demo.n_seeds", "must be >= 1");
    Require(c.low_target > 0.0 && c.low_target < c.high_target && c.high_target < 1.0,
            "mlp_demo.low_target", "targets must satisfy 0 < low < high < 1");
  }
}

std::string PipelineConfigToJson(const PipelineConfig& cfg) {
  return json_io::Dump(ConfigJson(cfg));
}

// ------------------------------------------------------------ speech

SpeechOutcome RunSpeechCase(const PipelineConfig& cfg, const LogFn& log) {
  const SpeechConfig& c = cfg.speech;
  RandomSource rng(cfg.seed);
  RandomSource spec_rng = rng.Split();
  const SpeechSpec spec = MakeSpeechSpec(c.spec, spec_rng);

  auto train_all = [&](const std::vector<Shadow<SpeechCorpus>>& corpora) {
    std::vector<AcousticModel> models(corpora.size());
    ParallelFor(corpora.size(), cfg.jobs, [&](std::size_t i) {
      models[i] = TrainAcousticModel(corpora[i].data, spec.n_states, c.viterbi_iters,
                                     c.baum_welch_iters, c.var_floor);
    });
    return models;
  };

  Log(log, "speech: generating " + std::to_string(c.n_shadows) + " shadow corpora");
  RandomSource shadow_rng = rng.Split();
  std::vector<AcousticModel> models;
  std::vector<Property> labels;
  {
    const auto shadows =
        GenShadowArray(spec, c.n_shadows, c.balance, c.sequences_per_phoneme, shadow_rng);
    labels = ShadowLabels(shadows);
    Log(log, "speech: training shadow acoustic models");
    models = train_all(shadows);
  }
  RandomSource label_rng = rng.Split();
  if (c.shuffle_labels) label_rng.Shuffle(labels);

  Log(log, "speech: training " + std::to_string(c.n_baselines) + " baselines and the reference");
  RandomSource baseline_rng = rng.Split();
  std::vector<AcousticModel> baselines;
  {
    const auto corpora =
        GenBaselineArray(spec, c.n_baselines, c.sequences_per_phoneme, baseline_rng);
    baselines = train_all(corpora);
  }
  RandomSource reference_rng = rng.Split();
  const AcousticModel reference = TrainAcousticModel(
      GenSpeechCorpus(spec, true, c.reference_sequences_per_phoneme, reference_rng),
      spec.n_states, c.viterbi_iters, c.baum_welch_iters, c.var_floor);

  SpeechOutcome o;
  o.shifted = ShiftedPhonemes(spec);
  o.divergences = PhonemeDivergences(reference, baselines);
  for (std::size_t i = 0; i < c.top_k; ++i) o.selected.push_back(o.divergences[i].phoneme);
  for (const auto& s : o.selected) {
    if (std::find(o.shifted.begin(), o.shifted.end(), s) != o.shifted.end()) ++o.recovered;
  }

  std::vector<FeatureVectorSet> features;
  for (const auto& m : models) features.push_back(ExtractFeatures(m));
  RandomSource split_rng = rng.Split();
  const auto [train_idx, test_idx] = SplitShadows(labels, c.train_fraction, split_rng);
  const auto train_f = Pick(features, train_idx);
  const auto test_f = Pick(features, test_idx);
  const auto train_l = Pick(labels, train_idx);
  const auto test_l = Pick(labels, test_idx);
  const std::uint64_t tree_seed = rng.SplitSeed();

  Log(log, "speech: unfiltered meta-classifier");
  {
    RandomSource tree_rng(tree_seed);
    o.unfiltered = EvaluateHoldout(train_f, train_l, test_f, test_l, c.tree, tree_rng);
  }
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_ph;
  for (std::size_t i = 0; i < test_f.size(); ++i) {
    for (std::size_t r = 0; r < test_f[i].rows.size(); ++r) {
      const auto& ph = std::get<std::string>(test_f[i].rows[r].values[0]);
      auto& [correct, total] = per_ph[ph];
      ++total;
      if (o.unfiltered.verdicts[i].per_row[r] == test_l[i]) ++correct;
    }
  }
  for (const auto& [ph, ct] : per_ph) {
    o.per_phoneme_accuracy[ph] =
        static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }

  Log(log, "speech: filtered meta-classifier on " + std::to_string(c.top_k) + " phonemes");
  std::vector<FeatureVectorSet> train_k, test_k;
  for (const auto& f : train_f) train_k.push_back(FilterPhonemes(f, o.selected));
  for (const auto& f : test_f) test_k.push_back(FilterPhonemes(f, o.selected));
  {
    RandomSource tree_rng(tree_seed);
    o.filtered = EvaluateHoldout(train_k, train_l, test_k, test_l, c.tree, tree_rng);
  }
  {
    RandomSource tree_rng(tree_seed);
    o.meta = TrainMeta(BuildMetaTrainingSet(train_k, train_l), c.tree, tree_rng);
  }
  return o;
}

std::string SpeechReport(const PipelineConfig& cfg, const SpeechOutcome& o) {
  Json div = Json::array();
  for (const auto& s : o.divergences) div.push_back({{"phoneme", s.phoneme}, {"score", s.score}});
  Json per_ph = Json::object();
  for (const auto& [ph, acc] : o.per_phoneme_accuracy) per_ph[ph] = acc;
  Json results = {{"shifted_phonemes", o.shifted},
                  {"selected_phonemes", o.selected},
                  {"recovered", o.recovered},
                  {"divergences", std::move(div)},
                  {"unfiltered", HoldoutJson(o.unfiltered)},
                  {"filtered", HoldoutJson(o.filtered)},
                  {"unfiltered_per_phoneme_accuracy", std::move(per_ph)}};
  return DumpReport(cfg, std::move(results));
}

// ------------------------------------------------------------ netflow

namespace {

std::vector<SvmModel> TrainSvms(const std::vector<Shadow<Dataset>>& shadows,
                                const NetflowConfig& c, std::size_t jobs,
                                RandomSource& rng) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < shadows.size(); ++i) seeds.push_back(rng.SplitSeed());
  std::vector<SvmModel> models(shadows.size());
  ParallelFor(shadows.size(), jobs, [&](std::size_t i) {
    RandomSource r(seeds[i]);
    models[i] = SmoTrain(FlowFeatures(shadows[i].data), c.kernel, c.smo, r);
  });
  return models;
}

}  // namespace

NetflowOutcome RunNetflowCase(const PipelineConfig& cfg, const LogFn& log) {
  const NetflowConfig& c = cfg.netflow;
  RandomSource rng(cfg.seed);
  NetflowOutcome o;

  Log(log, "netflow: generating and training " + std::to_string(c.n_shadows) + " shadow SVMs");
  RandomSource shadow_rng = rng.Split();
  RandomSource train_rng = rng.Split();
  std::vector<SvmModel> svms;
  std::vector<Property> labels;
  {
    const auto shadows =
        GenShadowArray(c.spec, c.n_shadows, c.balance, c.flows_per_shadow, shadow_rng);
    labels = ShadowLabels(shadows);
    svms = TrainSvms(shadows, c, cfg.jobs, train_rng);
  }
  RandomSource label_rng = rng.Split();
  if (c.shuffle_labels) label_rng.Shuffle(labels);

  std::vector<FeatureVectorSet> features;
  for (const auto& m : svms) {
    o.support_vectors.push_back(m.support_vectors.size());
    if (m.converged) ++o.converged;
    features.push_back(ExtractFeatures(m));
  }
  const MetaDataset md = BuildMetaTrainingSet(features, labels);
  o.meta_rows = md.data.size();

  Log(log, "netflow: " + std::to_string(c.folds) + "-fold cross-validation over " +
               std::to_string(o.meta_rows) + " support-vector rows");
  RandomSource cv_rng = rng.Split();
  const TreeParams tree = c.tree;
  o.cv = CrossValidate(
      md.data, c.folds,
      [&tree](const Dataset& train, RandomSource& r) -> Predictor {
        auto t = std::make_shared<DecisionTree>(TrainTree(train, tree, r));
        return [t](const Instance& inst) { return Classify(*t, inst); };
      },
      cv_rng);
  o.cv_metrics = ComputeMetrics(o.cv.pooled);

  RandomSource meta_rng = rng.Split();
  o.meta = TrainMeta(md, c.tree, meta_rng);

  Log(log, "netflow: judging " + std::to_string(c.n_targets) + " held-out targets");
  RandomSource target_rng = rng.Split();
  RandomSource target_train_rng = rng.Split();
  const auto targets =
      GenShadowArray(c.spec, c.n_targets, 0.5, c.flows_per_shadow, target_rng);
  const auto target_svms = TrainSvms(targets, c, cfg.jobs, target_train_rng);
  std::size_t row_correct = 0;
  std::size_t row_total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    PropertyVerdict v = InferProperty(o.meta, TrainedModel(target_svms[i]));
    const Property truth = targets[i].label.value;
    if (v.label.value == truth) ++o.targets_correct;
    for (Property p : v.per_row) row_correct += p == truth;
    row_total += v.per_row.size();
    o.target_verdicts.push_back(std::move(v));
    o.target_truths.push_back(truth);
  }
  o.target_row_accuracy =
      row_total == 0 ? 0.0 : static_cast<double>(row_correct) / static_cast<double>(row_total);
  return o;
}

std::string NetflowReport(const PipelineConfig& cfg, const NetflowOutcome& o) {
  Json verdicts = Json::array();
  for (std::size_t i = 0; i < o.target_verdicts.size(); ++i) {
    verdicts.push_back(VerdictJson(o.target_verdicts[i], o.target_truths[i]));
  }
  Json results = {
      {"support_vectors_per_shadow", o.support_vectors},
      {"shadows_converged", o.converged},
      {"meta_rows", o.meta_rows},
      {"meta_tree", {{"nodes", o.meta.tree.NodeCount()},
                     {"leaves", o.meta.tree.LeafCount()},
                     {"training_accuracy", o.meta.training_accuracy}}},
      {"cross_validation",
       {{"fold_accuracy", o.cv.fold_accuracy},
        {"mean_accuracy", o.cv.mean_accuracy},
        {"confusion_matrix", ConfusionJson(o.cv.pooled)},
        {"metrics", MetricsJson(o.cv_metrics)}}},
      {"targets",
       {{"correct", o.targets_correct},
        {"total", o.target_verdicts.size()},
        {"row_accuracy", o.target_row_accuracy},
        {"verdicts", std::move(verdicts)}}}};
  return DumpReport(cfg, std::move(results));
}

// ------------------------------------------------------------ dp bypass

DpBypassOutcome RunDpBypassCase(const PipelineConfig& cfg, const LogFn& log) {
  const DpBypassConfig& c = cfg.dp_bypass;
  RandomSource rng(cfg.seed);
  auto pool = [&](bool with_property) {
    RandomSource r = rng.Split();
    std::vector<Vector> points;
    for (const FlowRecord& f : GenFlows(c.spec, with_property, c.pool_size, r)) {
      const Vector v = FlowFeatureVector(f);
      points.push_back({v[3], v[5]});
    }
    return points;
  };
  Log(log, "dp_bypass: generating flow pools");
  const auto points_p = pool(true);
  const auto points_notp = pool(false);
  Log(log, "dp_bypass: training " + std::to_string(c.attack.n_runs) +
               " models per property and arm");
  RandomSource attack_rng = rng.Split();
  DpBypassOutcome o;
  o.report = RunDpBypass(points_p, points_notp, c.attack, attack_rng);

  auto final_meta = [&](const DpArm& arm, std::uint64_t seed) {
    std::vector<FeatureVectorSet> f;
    std::vector<Property> l;
    for (const auto& m : arm.models_p) {
      f.push_back(ExtractFeatures(m));
      l.push_back(Property::kP);
    }
    for (const auto& m : arm.models_notp) {
      f.push_back(ExtractFeatures(m));
      l.push_back(Property::kNotP);
    }
    RandomSource r(seed);
    return TrainMeta(BuildMetaTrainingSet(f, l), c.attack.tree, r);
  };
  const std::uint64_t meta_seed = rng.SplitSeed();
  o.meta_noiseless = final_meta(o.report.noiseless, meta_seed);
  o.meta_sulq = final_meta(o.report.sulq, meta_seed);
  return o;
}

std::string ScatterCsv(const std::vector<CentroidRow>& rows, const std::string& arm) {
  std::ostringstream out;
  out << "x,y,arm,run\n";
  for (const auto& r : rows) {
    out << FormatReal(r.x) << ',' << FormatReal(r.y) << ',' << arm << ',' << r.run << '\n';
  }
  return out.str();
}

std::string DpBypassReportJson(const PipelineConfig& cfg, const DpBypassOutcome& o) {
  const auto& r = o.report;
  Json clamp = Json::array();
  for (const auto& [lo, hi] : r.clamp) clamp.push_back({lo, hi});
  auto arm = [](const DpArm& a) {
    Json j = ModelCvJson(a.attack);
    std::size_t converged = 0;
    for (const auto* list : {&a.models_p, &a.models_notp}) {
      for (const auto& m : *list) converged += m.converged;
    }
    j["models_per_property"] = a.models_p.size();
    j["models_converged"] = converged;
    return j;
  };
  Json results = {{"clamp_used", std::move(clamp)},
                  {"separation", r.separation},
                  {"displacement", r.displacement},
                  {"displacement_ratio", r.separation > 0 ? r.displacement / r.separation : 0.0},
                  {"noiseless", arm(r.noiseless)},
                  {"sulq", arm(r.sulq)},
                  {"scatter_files",
                   {"scatter_noiseless_P.csv", "scatter_noiseless_NotP.csv",
                    "scatter_sulq_P.csv", "scatter_sulq_NotP.csv"}}};
  return DumpReport(cfg, std::move(results));
}

// ------------------------------------------------------------ mlp demo

std::vector<TrainingPair> IdentityPatterns(std::size_t n, double low, double high) {
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingPair p;
    p.input.assign(n, 0.0);
    p.input[i] = 1.0;
    p.target.assign(n, low);
    p.target[i] = high;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

MlpDemoOutcome RunMlpDemoCase(const PipelineConfig& cfg, const LogFn& log) {
  const MlpDemoConfig& c = cfg.mlp_demo;
  RandomSource rng(cfg.seed);
  const auto pairs = IdentityPatterns(8, c.low_target, c.high_target);
  MlpDemoOutcome o;
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < c.n_seeds; ++s) seeds.push_back(rng.SplitSeed());
  o.seeds.resize(c.n_seeds);
  std::vector<Mlp> nets(c.n_seeds);
  ParallelFor(c.n_seeds, cfg.jobs, [&](std::size_t s) {
    RandomSource r(seeds[s]);
    const Mlp init = MlpInit({8, c.hidden, 8}, r);
    BackpropParams params;
    params.learning_rate = c.learning_rate;
    params.epochs = c.epochs;
    nets[s] = BackpropTrain(init, pairs, params, r);
    MlpSeedResult& res = o.seeds[s];
    res.seed = seeds[s];
    res.initial_error = TotalSquaredError(init, pairs);
    res.final_error = TotalSquaredError(nets[s], pairs);
    res.identity = true;
    std::set<std::vector<bool>> codes;
    for (const auto& p : pairs) {
      const ForwardResult fr = Forward(nets[s], p.input);
      const auto out_max = std::max_element(fr.output.begin(), fr.output.end());
      const auto in_max = std::max_element(p.input.begin(), p.input.end());
      if (out_max - fr.output.begin() != in_max - p.input.begin()) res.identity = false;
      res.hidden.push_back(fr.activations[1]);
      std::vector<bool> code;
      for (double h : fr.activations[1]) code.push_back(h > 0.5);
      codes.insert(code);
    }
    res.distinct_codes = codes.size() == pairs.size();
  });
  for (const auto& r : o.seeds) o.passing += r.identity && r.distinct_codes;
  o.first_net = nets.front();
  Log(log, "mlp_demo: " + std::to_string(o.passing) + "/" + std::to_string(c.n_seeds) +
               " seeds learned the identity with distinct hidden codes");
  return o;
}

std::string MlpDemoReport(const PipelineConfig& cfg, const MlpDemoOutcome& o) {
  Json seeds = Json::array();
  for (const auto& r : o.seeds) {
    seeds.push_back({{"seed", r.seed},
                     {"identity", r.identity},
                     {"distinct_codes", r.distinct_codes},
                     {"initial_error", r.initial_error},
                     {"final_error", r.final_error},
                     {"hidden", r.hidden}});
  }
  Json results = {{"passing", o.passing}, {"seeds", std::move(seeds)}};
  return DumpReport(cfg, std::move(results));
}

// ------------------------------------------------------------ driver

PipelineResult RunPipeline(const PipelineConfig& cfg, const LogFn& log) {
  PipelineResult result;
  namespace fs = std::filesystem;
  auto write = [&](const std::string& name, const std::string& text) {
    const fs::path path = cfg.out_dir / name;
    WriteTextFile(path, text);
    result.files.push_back(path);
  };
  try {
    ValidatePipelineConfig(cfg);
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create '" + cfg.out_dir.string() + "': " + ec.message());
    switch (cfg.case_kind) {
      case PipelineCase::kSpeech: {
        const SpeechOutcome o = RunSpeechCase(cfg, log);
        write("report.json", SpeechReport(cfg, o));
        write("meta_classifier.json", SerializeMetaClassifier(o.meta));
        break;
      }
      case PipelineCase::kNetflow: {
        const NetflowOutcome o = RunNetflowCase(cfg, log);
        write("report.json", NetflowReport(cfg, o));
        write("meta_classifier.json", SerializeMetaClassifier(o.meta));
        break;
      }
      case PipelineCase::kDpBypass: {
        const DpBypassOutcome o = RunDpBypassCase(cfg, log);
        write("report.json", DpBypassReportJson(cfg, o));
        write("meta_classifier_noiseless.json", SerializeMetaClassifier(o.meta_noiseless));
        write("meta_classifier_sulq.json", SerializeMetaClassifier(o.meta_sulq));
        const auto& r = o.report;
        write("scatter_noiseless_P.csv", ScatterCsv(r.noiseless.scatter_p, "noiseless"));
        write("scatter_noiseless_NotP.csv", ScatterCsv(r.noiseless.scatter_notp, "noiseless"));
        write("scatter_sulq_P.csv", ScatterCsv(r.sulq.scatter_p, "sulq"));
        write("scatter_sulq_NotP.csv", ScatterCsv(r.sulq.scatter_notp, "sulq"));
        break;
      }
      case PipelineCase::kMlpDemo: {
        const MlpDemoOutcome o = RunMlpDemoCase(cfg, log);
        write("report.json", MlpDemoReport(cfg, o));
        write("model.json", SerializeModel(o.first_net));
        break;
      }
    }
    result.ok = true;
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = e.what();
    Json j;
    j["kind"] = "attack_report";
    j["format_version"] = kFormatVersion;
    j["status"] = "failed";
    j["error"] = e.what();
    j["config"] = ConfigJson(cfg);
    try {
      std::error_code ec;
      fs::create_directories(cfg.out_dir, ec);
      write("report.json", json_io::Dump(j));
    } catch (const std::exception&) {
      // The error is still reported through `result`.
    }
  }
  return result;
}

}  // namespace shadowprobe

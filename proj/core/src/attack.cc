#include "shadowprobe/attack.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_io.h"
#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

std::vector<Attribute> NumericSchema(const std::string& prefix, std::size_t n,
                                     std::size_t first = 0) {
  std::vector<Attribute> schema;
  for (std::size_t i = 0; i < n; ++i) {
    schema.push_back({prefix + std::to_string(first + i), AttributeKind::kNumeric});
  }
  return schema;
}

Instance NumericRow(std::span<const double> values) {
  Instance inst;
  inst.values.reserve(values.size());
  for (double v : values) inst.values.emplace_back(v);
  return inst;
}

FeatureVectorSet FromSvm(const SvmModel& m) {
  FeatureVectorSet fs;
  fs.source_kind = ModelKind::kSvm;
  fs.schema.push_back({"y", AttributeKind::kNumeric});
  const auto xs = NumericSchema("x", m.dim());
  fs.schema.insert(fs.schema.end(), xs.begin(), xs.end());
  for (const auto& sv : m.support_vectors) {
    Instance inst;
    inst.values.emplace_back(static_cast<double>(sv.y));
    for (double v : sv.x) inst.values.emplace_back(v);
    fs.rows.push_back(std::move(inst));
  }
  return fs;
}

FeatureVectorSet FromAcoustic(const AcousticModel& m) {
  FeatureVectorSet fs;
  fs.source_kind = ModelKind::kHmm;
  fs.schema.push_back({"ph", AttributeKind::kCategorical});
  const auto means = NumericSchema("mean_", m.dim());
  const auto vars = NumericSchema("var_", m.dim());
  fs.schema.insert(fs.schema.end(), means.begin(), means.end());
  fs.schema.insert(fs.schema.end(), vars.begin(), vars.end());
  for (const auto& [name, hmm] : m.phonemes()) {
    for (std::size_t s = 0; s < hmm.n_states; ++s) {
      Instance inst;
      inst.values.emplace_back(name);
      for (double v : hmm.means[s]) inst.values.emplace_back(v);
      for (double v : hmm.vars[s]) inst.values.emplace_back(v);
      fs.rows.push_back(std::move(inst));
    }
  }
  return fs;
}

FeatureVectorSet FromKMeans(const KMeansModel& m) {
  FeatureVectorSet fs;
  fs.source_kind = ModelKind::kKMeans;
  fs.schema = NumericSchema("c", m.dim());
  for (const Vector& c : m.centroids) fs.rows.push_back(NumericRow(c));
  return fs;
}

FeatureVectorSet FromMlp(const Mlp& m) {
  m.Validate();
  FeatureVectorSet fs;
  fs.source_kind = ModelKind::kMlp;
  const Matrix& w = m.weights.front();
  fs.schema = NumericSchema("w", w.cols());
  for (std::size_t j = 0; j < w.rows(); ++j) fs.rows.push_back(NumericRow(w.row(j)));
  return fs;
}

std::string FeatureLabel(Property p) { return ToString(p); }

const std::vector<std::string>& MetaDomain() {
  static const std::vector<std::string> domain = {kLabelNotP, kLabelP};
  return domain;
}

}  // namespace

FeatureVectorSet ExtractFeatures(const TrainedModel& model) {
  switch (KindOf(model)) {
    case ModelKind::kSvm:
      return FromSvm(std::get<SvmModel>(model));
    case ModelKind::kHmm:
      return FromAcoustic(std::get<AcousticModel>(model));
    case ModelKind::kKMeans:
      return FromKMeans(std::get<KMeansModel>(model));
    case ModelKind::kMlp:
      return FromMlp(std::get<Mlp>(model));
    case ModelKind::kDtree:
      break;
  }
  throw ContractError("ExtractFeatures: unsupported model kind '" +
                      std::string(ToString(KindOf(model))) + "'");
}

MetaDataset BuildMetaTrainingSet(std::span<const LabeledModel> shadows) {
  std::vector<FeatureVectorSet> features;
  std::vector<Property> labels;
  features.reserve(shadows.size());
  for (const auto& s : shadows) {
    if (!features.empty() && KindOf(s.model) != features.front().source_kind) {
      throw ContractError("BuildMetaTrainingSet: shadows of mixed model kinds");
    }
    features.push_back(ExtractFeatures(s.model));
    labels.push_back(s.label);
  }
  return BuildMetaTrainingSet(features, labels);
}

MetaDataset BuildMetaTrainingSet(std::span<const FeatureVectorSet> features,
                                 std::span<const Property> labels) {
  if (features.size() != labels.size()) {
    throw ContractError("BuildMetaTrainingSet: one label per shadow expected");
  }
  if (features.empty()) throw ContractError("BuildMetaTrainingSet: no shadows");
  const bool has_p = std::find(labels.begin(), labels.end(), Property::kP) != labels.end();
  const bool has_notp =
      std::find(labels.begin(), labels.end(), Property::kNotP) != labels.end();
  if (!has_p || !has_notp) {
    throw ContractError("BuildMetaTrainingSet: both P and NotP shadows are required");
  }
  MetaDataset md;
  md.source_kind = features.front().source_kind;
  const std::vector<Attribute>& schema = features.front().schema;
  std::vector<Instance> rows;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].source_kind != md.source_kind) {
      throw ContractError("BuildMetaTrainingSet: shadows of mixed model kinds");
    }
    if (features[i].schema != schema) {
      throw ContractError("BuildMetaTrainingSet: shadows with different feature schemas");
    }
    for (const Instance& r : features[i].rows) {
      Instance labeled = r;
      labeled.label = FeatureLabel(labels[i]);
      rows.push_back(std::move(labeled));
      md.source.push_back(i);
    }
  }
  if (rows.empty()) throw ContractError("BuildMetaTrainingSet: no feature rows");
  md.data = Dataset(schema, std::move(rows), MetaDomain());
  return md;
}

std::string ExtractionFingerprint(ModelKind kind,
                                  const std::vector<Attribute>& schema) {
  std::string fp = std::string(ToString(kind)) + "|";
  for (const auto& a : schema) {
    fp += a.name + (a.kind == AttributeKind::kNumeric ? ":n;" : ":c;");
  }
  return fp;
}

MetaClassifier TrainMeta(const MetaDataset& md, const TreeParams& params,
                         RandomSource& rng) {
  MetaClassifier mc;
  mc.tree = TrainTree(md.data, params, rng);
  mc.source_kind = md.source_kind;
  mc.fingerprint = ExtractionFingerprint(md.source_kind, md.data.schema());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < md.data.size(); ++i) {
    if (Classify(mc.tree, md.data.row(i)) == md.data.Label(i)) ++correct;
  }
  mc.training_accuracy =
      static_cast<double>(correct) / static_cast<double>(md.data.size());
  return mc;
}

PropertyVerdict VerdictFromVotes(std::vector<Property> per_row) {
  PropertyVerdict v;
  for (Property p : per_row) (p == Property::kP ? v.votes_p : v.votes_notp)++;
  v.tie = v.votes_p == v.votes_notp;
  v.label.value = v.votes_p > v.votes_notp ? Property::kP : Property::kNotP;
  v.label.description = "majority vote over extracted rows";
  v.per_row = std::move(per_row);
  return v;
}

PropertyVerdict InferProperty(const MetaClassifier& mc,
                              const FeatureVectorSet& features) {
  if (ExtractionFingerprint(features.source_kind, features.schema) != mc.fingerprint) {
    throw ContractError("InferProperty: target kind or schema does not match the "
                        "meta-classifier (" + mc.fingerprint + ")");
  }
  std::vector<Property> votes;
  votes.reserve(features.rows.size());
  for (const Instance& r : features.rows) {
    votes.push_back(PropertyFromString(Classify(mc.tree, r)));
  }
  return VerdictFromVotes(std::move(votes));
}

PropertyVerdict InferProperty(const MetaClassifier& mc, const TrainedModel& target) {
  if (KindOf(target) != mc.source_kind) {
    throw ContractError(std::string("InferProperty: target is '") +
                        ToString(KindOf(target)) + "', meta-classifier expects '" +
                        ToString(mc.source_kind) + "'");
  }
  return InferProperty(mc, ExtractFeatures(target));
}

std::string SerializeMetaClassifier(const MetaClassifier& mc) {
  json_io::Json j;
  j["kind"] = "meta_classifier";
  j["format_version"] = kFormatVersion;
  j["source_kind"] = ToString(mc.source_kind);
  j["fingerprint"] = mc.fingerprint;
  j["training_accuracy"] = mc.training_accuracy;
  j["tree"] = json_io::TreeToJson(mc.tree);
  return json_io::Dump(j);
}

MetaClassifier DeserializeMetaClassifier(const std::string& text) {
  const json_io::Json j = json_io::Parse(text);
  try {
    json_io::CheckHeader(j, "meta_classifier");
    MetaClassifier mc;
    mc.source_kind = ModelKindFromString(j.at("source_kind").get<std::string>());
    mc.fingerprint = j.at("fingerprint").get<std::string>();
    mc.training_accuracy = j.at("training_accuracy").get<double>();
    mc.tree = json_io::TreeFromJson(j.at("tree"));
    return mc;
  } catch (const json_io::Json::exception& e) {
    throw StructuralError(std::string("malformed meta-classifier: ") + e.what());
  }
}

double KlGaussian(const Gaussian1D& p, const Gaussian1D& q) {
  if (!(p.variance > 0.0) || !(q.variance > 0.0)) {
    throw DomainError("KlGaussian: variances must be > 0");
  }
  const double diff = p.mean - q.mean;
  const double ratio = p.variance / q.variance;
  return diff * diff / (2.0 * p.variance) + 0.5 * (ratio - 1.0 - std::log(ratio));
}

std::vector<PhonemeScore> PhonemeDivergences(const AcousticModel& reference,
                                             std::span<const AcousticModel> baselines) {
  if (baselines.empty()) throw ContractError("PhonemeDivergences: no baselines");
  const auto names = reference.PhonemeNames();
  for (const auto& b : baselines) {
    if (b.PhonemeNames() != names || b.dim() != reference.dim()) {
      throw ContractError("PhonemeDivergences: baseline phoneme set or dim differs");
    }
  }
  std::vector<PhonemeScore> scores;
  for (const auto& name : names) {
    const GaussianHmm& ref = reference.at(name);
    double total = 0.0;
    for (const auto& b : baselines) {
      const GaussianHmm& base = b.at(name);
      if (base.n_states != ref.n_states) {
        throw ContractError("PhonemeDivergences: state count differs for '" + name + "'");
      }
      double sum = 0.0;
      for (std::size_t s = 0; s < ref.n_states; ++s) {
        for (std::size_t d = 0; d < ref.dim; ++d) {
          sum += KlGaussian({ref.means[s][d], ref.vars[s][d]},
                            {base.means[s][d], base.vars[s][d]});
        }
      }
      total += sum / static_cast<double>(ref.n_states * ref.dim);
    }
    scores.push_back({name, total / static_cast<double>(baselines.size())});
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const PhonemeScore& a, const PhonemeScore& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.phoneme < b.phoneme;
                   });
  return scores;
}

std::vector<std::string> KlFilter(const AcousticModel& reference,
                                  std::span<const AcousticModel> baselines,
                                  std::size_t top_k) {
  if (top_k > reference.phonemes().size()) {
    throw ContractError("KlFilter: top_k exceeds the number of phonemes");
  }
  const auto scores = PhonemeDivergences(reference, baselines);
  std::vector<std::string> top;
  for (std::size_t i = 0; i < top_k; ++i) top.push_back(scores[i].phoneme);
  return top;
}

FeatureVectorSet FilterPhonemes(const FeatureVectorSet& features,
                                std::span<const std::string> phonemes) {
  if (features.source_kind != ModelKind::kHmm || features.schema.empty() ||
      features.schema[0].name != "ph") {
    throw ContractError("FilterPhonemes: expects acoustic-model features");
  }
  FeatureVectorSet out;
  out.source_kind = features.source_kind;
  out.schema = features.schema;
  for (const Instance& r : features.rows) {
    const auto& ph = std::get<std::string>(r.values[0]);
    if (std::find(phonemes.begin(), phonemes.end(), ph) != phonemes.end()) {
      out.rows.push_back(r);
    }
  }
  return out;
}

HoldoutResult EvaluateHoldout(std::span<const FeatureVectorSet> train,
                              std::span<const Property> train_labels,
                              std::span<const FeatureVectorSet> test,
                              std::span<const Property> test_labels,
                              const TreeParams& params, RandomSource& rng) {
  if (test.size() != test_labels.size()) {
    throw ContractError("EvaluateHoldout: one label per test shadow expected");
  }
  const MetaDataset md = BuildMetaTrainingSet(train, train_labels);
  const MetaClassifier mc = TrainMeta(md, params, rng);
  HoldoutResult r;
  r.confusion = MakeConfusionMatrix({}, {}, MetaDomain());
  r.train_rows = md.data.size();
  r.tree_nodes = mc.tree.NodeCount();
  r.tree_leaves = mc.tree.LeafCount();
  r.training_accuracy = mc.training_accuracy;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    PropertyVerdict v = InferProperty(mc, test[i]);
    for (Property p : v.per_row) r.confusion.Add(ToString(test_labels[i]), ToString(p));
    r.test_rows += v.per_row.size();
    if (v.label.value == test_labels[i]) ++correct;
    r.verdicts.push_back(std::move(v));
    r.truths.push_back(test_labels[i]);
  }
  if (r.test_rows > 0) r.metrics = ComputeMetrics(r.confusion);
  r.verdict_accuracy =
      test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
  return r;
}

ModelCvResult ModelLevelCrossValidate(std::span<const FeatureVectorSet> features,
                                      std::span<const Property> labels,
                                      std::size_t k, const TreeParams& params,
                                      RandomSource& rng) {
  if (features.size() != labels.size()) {
    throw ContractError("ModelLevelCrossValidate: one label per model expected");
  }
  std::vector<std::string> names;
  for (Property p : labels) names.push_back(ToString(p));
  const auto folds = StratifiedFolds(names, k, rng);
  std::vector<RandomSource> children;
  for (std::size_t f = 0; f < folds.size(); ++f) children.push_back(rng.Split());

  ModelCvResult r;
  r.row_confusion = MakeConfusionMatrix({}, {}, MetaDomain());
  r.verdict_confusion = MakeConfusionMatrix({}, {}, MetaDomain());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(features.size(), false);
    for (std::size_t idx : folds[f]) held[idx] = true;
    std::vector<FeatureVectorSet> train;
    std::vector<Property> train_labels;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (held[i]) continue;
      train.push_back(features[i]);
      train_labels.push_back(labels[i]);
    }
    const MetaClassifier mc =
        TrainMeta(BuildMetaTrainingSet(train, train_labels), params, children[f]);
    for (std::size_t idx : folds[f]) {
      const PropertyVerdict v = InferProperty(mc, features[idx]);
      for (Property p : v.per_row) {
        r.row_confusion.Add(ToString(labels[idx]), ToString(p));
      }
      r.verdict_confusion.Add(ToString(labels[idx]), ToString(v.label.value));
    }
  }
  r.verdict_accuracy = ComputeMetrics(r.verdict_confusion).accuracy;
  r.row_accuracy = ComputeMetrics(r.row_confusion).accuracy;
  return r;
}

double MatchedCentroidDistance(const std::vector<Vector>& a,
                               const std::vector<Vector>& b) {
  if (a.size() != b.size()) {
    throw ContractError("MatchedCentroidDistance: different centroid counts");
  }
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += SquaredDistance(a[i], b[perm[i]]);
    best = std::min(best, sum);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

namespace {

// `b` reordered to best match `reference`.
std::vector<Vector> AlignTo(const std::vector<Vector>& reference,
                            const std::vector<Vector>& b) {
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      sum += SquaredDistance(reference[i], b[perm[i]]);
    }
    if (sum < best) {
      best = sum;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  std::vector<Vector> out;
  for (std::size_t i : best_perm) out.push_back(b[i]);
  return out;
}

std::vector<Vector> MeanAligned(const std::vector<KMeansModel>& models) {
  const std::vector<Vector> reference = CanonicalCentroids(models.front());
  std::vector<Vector> mean(reference.size(), Vector(reference[0].size(), 0.0));
  for (const auto& m : models) {
    const auto aligned = AlignTo(reference, m.centroids);
    for (std::size_t c = 0; c < aligned.size(); ++c) {
      for (std::size_t d = 0; d < aligned[c].size(); ++d) mean[c][d] += aligned[c][d];
    }
  }
  for (auto& c : mean) {
    for (double& v : c) v /= static_cast<double>(models.size());
  }
  return mean;
}

void Scatter(const std::vector<KMeansModel>& models, std::vector<CentroidRow>& out) {
  for (std::size_t run = 0; run < models.size(); ++run) {
    for (const Vector& c : CanonicalCentroids(models[run])) {
      out.push_back({c[0], c.size() > 1 ? c[1] : 0.0, run});
    }
  }
}

void AttackArm(DpArm& arm, const DpBypassParams& params, std::uint64_t cv_seed) {
  std::vector<FeatureVectorSet> features;
  std::vector<Property> labels;
  for (const auto& m : arm.models_p) {
    features.push_back(ExtractFeatures(m));
    labels.push_back(Property::kP);
  }
  for (const auto& m : arm.models_notp) {
    features.push_back(ExtractFeatures(m));
    labels.push_back(Property::kNotP);
  }
  RandomSource cv_rng(cv_seed);
  arm.attack = ModelLevelCrossValidate(features, labels, params.folds, params.tree, cv_rng);
  Scatter(arm.models_p, arm.scatter_p);
  Scatter(arm.models_notp, arm.scatter_notp);
}

}  // namespace

DpBypassReport RunDpBypass(std::span<const Vector> points_p,
                           std::span<const Vector> points_notp,
                           const DpBypassParams& params, RandomSource& rng) {
  if (points_p.empty() || points_notp.empty()) {
    throw ContractError("RunDpBypass: both point sets must be non-empty");
  }
  if (params.n_runs < 1 || params.points_per_run < params.k) {
    throw ContractError("RunDpBypass: need n_runs >= 1 and points_per_run >= k");
  }
  const std::size_t dim = points_p[0].size();
  for (auto pool : {points_p, points_notp}) {
    for (const Vector& v : pool) {
      if (v.size() != dim) throw ContractError("RunDpBypass: ragged point dimensions");
    }
  }
  SulqParams sulq = params.sulq;
  if (sulq.clamp.empty()) {
    for (std::size_t d = 0; d < dim; ++d) {
      double lo = points_p[0][d];
      double hi = lo;
      for (auto pool : {points_p, points_notp}) {
        for (const Vector& v : pool) {
          lo = std::min(lo, v[d]);
          hi = std::max(hi, v[d]);
        }
      }
      if (!(lo < hi)) hi = lo + 1.0;
      sulq.clamp.emplace_back(lo, hi);
    }
  }
  sulq.Validate(dim);

  DpBypassReport report;
  report.clamp = sulq.clamp;
  report.noiseless.name = "noiseless";
  report.sulq.name = "sulq";
  for (Property prop : {Property::kP, Property::kNotP}) {
    const auto pool = prop == Property::kP ? points_p : points_notp;
    const std::size_t m = std::min(params.points_per_run, pool.size());
    for (std::size_t run = 0; run < params.n_runs; ++run) {
      std::vector<Vector> subset;
      subset.reserve(m);
      for (std::size_t idx : rng.SampleWithoutReplacement(pool.size(), m)) {
        subset.push_back(pool[idx]);
      }
      const std::uint64_t seed = rng.SplitSeed();
      RandomSource plain_rng(seed);
      RandomSource noisy_rng(seed);
      KMeansModel plain = KMeansTrain(subset, params.k, params.max_iters, plain_rng);
      KMeansModel noisy =
          SulqKMeansTrain(subset, params.k, params.max_iters, sulq, noisy_rng);
      report.displacement += MatchedCentroidDistance(plain.centroids, noisy.centroids);
      auto& plain_list =
          prop == Property::kP ? report.noiseless.models_p : report.noiseless.models_notp;
      auto& noisy_list =
          prop == Property::kP ? report.sulq.models_p : report.sulq.models_notp;
      plain_list.push_back(std::move(plain));
      noisy_list.push_back(std::move(noisy));
    }
  }
  report.displacement /= static_cast<double>(2 * params.n_runs);
  report.separation = MatchedCentroidDistance(MeanAligned(report.noiseless.models_p),
                                              MeanAligned(report.noiseless.models_notp));
  const std::uint64_t cv_seed = rng.SplitSeed();
  AttackArm(report.noiseless, params, cv_seed);
  AttackArm(report.sulq, params, cv_seed);
  return report;
}

}  // namespace shadowprobe

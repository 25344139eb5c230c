#include "shadowprobe/model.h"

#include <fstream>
#include <sstream>

#include "json_io.h"
#include "shadowprobe/error.h"

namespace shadowprobe {
namespace json_io {
namespace {

template <typename T>
T Get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw StructuralError(std::string("missing field '") + key + "'");
  }
  return j.at(key).get<T>();
}

const Json& At(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw StructuralError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

Json NodeToJson(const TreeNode& node) {
  Json j;
  if (node.test) {
    Json t;
    t["attribute"] = node.test->attribute;
    t["kind"] = ToString(node.test->kind);
    if (node.test->kind == AttributeKind::kNumeric) {
      t["threshold"] = node.test->threshold;
    } else {
      t["values"] = node.test->values;
    }
    j["test"] = std::move(t);
    Json children = Json::array();
    for (const auto& c : node.children) children.push_back(NodeToJson(c));
    j["children"] = std::move(children);
  } else {
    j["test"] = nullptr;
    j["children"] = Json::array();
  }
  j["leaf_label"] = node.label;
  j["count"] = node.count;
  j["tie_broken"] = node.tie_broken;
  return j;
}

TreeNode NodeFromJson(const Json& j) {
  TreeNode node;
  const Json& t = At(j, "test");
  if (!t.is_null()) {
    TreeNode::Test test;
    test.attribute = Get<std::size_t>(t, "attribute");
    const std::string kind = Get<std::string>(t, "kind");
    if (kind == "numeric") {
      test.kind = AttributeKind::kNumeric;
      test.threshold = Get<double>(t, "threshold");
    } else if (kind == "categorical") {
      test.kind = AttributeKind::kCategorical;
      test.values = Get<std::vector<std::string>>(t, "values");
    } else {
      throw StructuralError("unknown test kind '" + kind + "'");
    }
    node.test = std::move(test);
    for (const auto& c : At(j, "children")) node.children.push_back(NodeFromJson(c));
    const std::size_t expected = node.test->kind == AttributeKind::kNumeric
                                     ? 2
                                     : node.test->values.size() + 1;
    if (node.children.size() != expected) {
      throw StructuralError("tree node has the wrong number of children");
    }
  }
  node.label = Get<std::string>(j, "leaf_label");
  node.count = Get<std::size_t>(j, "count");
  node.tie_broken = Get<bool>(j, "tie_broken");
  return node;
}

}  // namespace

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix MatrixFromJson(const Json& j) {
  if (!j.is_array()) throw StructuralError("matrix must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (row.size() != cols) throw StructuralError("ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

Json SvmToJson(const SvmModel& m) {
  Json j;
  j["kernel"] = {{"kind", ToString(m.kernel.kind)},
                 {"gamma", m.kernel.gamma},
                 {"r", m.kernel.r},
                 {"degree", m.kernel.degree}};
  j["C"] = m.C;
  j["tol"] = m.tol;
  j["bias"] = m.bias;
  j["converged"] = m.converged;
  j["passes"] = m.passes;
  j["updates"] = m.updates;
  j["negative_label"] = m.negative_label;
  j["positive_label"] = m.positive_label;
  Json svs = Json::array();
  for (const auto& sv : m.support_vectors) {
    svs.push_back({{"index", sv.index}, {"y", sv.y}, {"alpha", sv.alpha}, {"x", sv.x}});
  }
  j["support_vectors"] = std::move(svs);
  return j;
}

SvmModel SvmFromJson(const Json& j) {
  SvmModel m;
  const Json& k = At(j, "kernel");
  m.kernel.kind = KernelKindFromString(Get<std::string>(k, "kind"));
  m.kernel.gamma = Get<double>(k, "gamma");
  m.kernel.r = Get<double>(k, "r");
  m.kernel.degree = Get<int>(k, "degree");
  m.C = Get<double>(j, "C");
  m.tol = Get<double>(j, "tol");
  m.bias = Get<double>(j, "bias");
  m.converged = Get<bool>(j, "converged");
  m.passes = Get<std::size_t>(j, "passes");
  m.updates = Get<std::size_t>(j, "updates");
  m.negative_label = Get<std::string>(j, "negative_label");
  m.positive_label = Get<std::string>(j, "positive_label");
  for (const auto& s : At(j, "support_vectors")) {
    SupportVector sv;
    sv.index = Get<std::size_t>(s, "index");
    sv.y = Get<int>(s, "y");
    sv.alpha = Get<double>(s, "alpha");
    sv.x = Get<Vector>(s, "x");
    m.support_vectors.push_back(std::move(sv));
  }
  return m;
}

Json HmmToJson(const GaussianHmm& m) {
  return {{"n_states", m.n_states}, {"dim", m.dim},       {"var_floor", m.var_floor},
          {"trans", MatrixToJson(m.trans)}, {"means", m.means}, {"vars", m.vars}};
}

GaussianHmm HmmFromJson(const Json& j) {
  GaussianHmm m;
  m.n_states = Get<std::size_t>(j, "n_states");
  m.dim = Get<std::size_t>(j, "dim");
  m.var_floor = Get<double>(j, "var_floor");
  m.trans = MatrixFromJson(At(j, "trans"));
  m.means = Get<std::vector<Vector>>(j, "means");
  m.vars = Get<std::vector<Vector>>(j, "vars");
  try {
    m.Validate();
  } catch (const ContractError& e) {
    throw StructuralError(e.what());
  }
  return m;
}

Json AcousticToJson(const AcousticModel& m) {
  Json phonemes = Json::object();
  for (const auto& [name, hmm] : m.phonemes()) phonemes[name] = HmmToJson(hmm);
  return {{"dim", m.dim()}, {"phonemes", std::move(phonemes)}};
}

AcousticModel AcousticFromJson(const Json& j) {
  std::map<std::string, GaussianHmm> phonemes;
  for (const auto& [name, h] : At(j, "phonemes").items()) {
    phonemes.emplace(name, HmmFromJson(h));
  }
  try {
    AcousticModel m(std::move(phonemes));
    if (m.dim() != Get<std::size_t>(j, "dim")) {
      throw StructuralError("acoustic model dim disagrees with its phonemes");
    }
    return m;
  } catch (const ContractError& e) {
    throw StructuralError(e.what());
  }
}

Json KMeansToJson(const KMeansModel& m) {
  return {{"k", m.k},
          {"converged", m.converged},
          {"iterations_run", m.iterations_run},
          {"centroids", m.centroids},
          {"objective_trace", m.objective_trace}};
}

KMeansModel KMeansFromJson(const Json& j) {
  KMeansModel m;
  m.k = Get<std::size_t>(j, "k");
  m.converged = Get<bool>(j, "converged");
  m.iterations_run = Get<std::size_t>(j, "iterations_run");
  m.centroids = Get<std::vector<Vector>>(j, "centroids");
  m.objective_trace = Get<std::vector<double>>(j, "objective_trace");
  if (m.centroids.size() != m.k) throw StructuralError("k-means: k != #centroids");
  return m;
}

Json MlpToJson(const Mlp& m) {
  Json weights = Json::array();
  for (const Matrix& w : m.weights) weights.push_back(MatrixToJson(w));
  return {{"layer_sizes", m.layer_sizes}, {"weights", std::move(weights)}};
}

Mlp MlpFromJson(const Json& j) {
  Mlp m;
  m.layer_sizes = Get<std::vector<std::size_t>>(j, "layer_sizes");
  for (const auto& w : At(j, "weights")) m.weights.push_back(MatrixFromJson(w));
  try {
    m.Validate();
  } catch (const ContractError& e) {
    throw StructuralError(e.what());
  }
  return m;
}

Json TreeToJson(const DecisionTree& t) {
  Json schema = Json::array();
  for (const auto& a : t.schema()) schema.push_back({{"name", a.name}, {"kind", ToString(a.kind)}});
  Json params = {{"min_leaf_size", t.params().min_leaf_size}};
  params["max_depth"] = t.params().max_depth ? Json(*t.params().max_depth) : Json(nullptr);
  return {{"schema", std::move(schema)},
          {"params", std::move(params)},
          {"root", NodeToJson(t.root())}};
}

DecisionTree TreeFromJson(const Json& j) {
  std::vector<Attribute> schema;
  for (const auto& a : At(j, "schema")) {
    const std::string kind = Get<std::string>(a, "kind");
    if (kind != "numeric" && kind != "categorical") {
      throw StructuralError("unknown attribute kind '" + kind + "'");
    }
    schema.push_back({Get<std::string>(a, "name"),
                      kind == "numeric" ? AttributeKind::kNumeric
                                        : AttributeKind::kCategorical});
  }
  const Json& p = At(j, "params");
  TreeParams params;
  params.min_leaf_size = Get<std::size_t>(p, "min_leaf_size");
  if (!At(p, "max_depth").is_null()) params.max_depth = Get<std::size_t>(p, "max_depth");
  return DecisionTree(NodeFromJson(At(j, "root")), std::move(schema), params);
}

void CheckHeader(const Json& j, const std::string& expected) {
  if (!j.is_object()) throw StructuralError("document is not a JSON object");
  const int version = Get<int>(j, "format_version");
  if (version != kFormatVersion) {
    throw VersionError("unsupported format_version " + std::to_string(version));
  }
  const std::string kind = Get<std::string>(j, "kind");
  if (kind != expected) throw KindError("expected kind '" + expected + "', got '" + kind + "'");
}

Json ModelToJson(const TrainedModel& model) {
  Json j;
  j["kind"] = ToString(KindOf(model));
  j["format_version"] = kFormatVersion;
  Json body = std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SvmModel>) return SvmToJson(m);
        if constexpr (std::is_same_v<T, AcousticModel>) return AcousticToJson(m);
        if constexpr (std::is_same_v<T, KMeansModel>) return KMeansToJson(m);
        if constexpr (std::is_same_v<T, Mlp>) return MlpToJson(m);
        if constexpr (std::is_same_v<T, DecisionTree>) return TreeToJson(m);
      },
      model);
  for (auto& [key, value] : body.items()) j[key] = value;
  return j;
}

TrainedModel ModelFromJson(const Json& j) {
  try {
    if (!j.is_object()) throw StructuralError("document is not a JSON object");
    const int version = Get<int>(j, "format_version");
    if (version != kFormatVersion) {
      throw VersionError("unsupported format_version " + std::to_string(version));
    }
    switch (ModelKindFromString(Get<std::string>(j, "kind"))) {
      case ModelKind::kSvm:
        return SvmFromJson(j);
      case ModelKind::kHmm:
        return AcousticFromJson(j);
      case ModelKind::kKMeans:
        return KMeansFromJson(j);
      case ModelKind::kMlp:
        return MlpFromJson(j);
      case ModelKind::kDtree:
        return TreeFromJson(j);
    }
  } catch (const Json::exception& e) {
    throw StructuralError(std::string("malformed model document: ") + e.what());
  }
  throw KindError("unreachable model kind");
}

Json Parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw StructuralError(std::string("malformed JSON: ") + e.what());
  }
}

std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace json_io

const char* ToString(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSvm:
      return "svm";
    case ModelKind::kHmm:
      return "hmm";
    case ModelKind::kKMeans:
      return "kmeans";
    case ModelKind::kMlp:
      return "mlp";
    case ModelKind::kDtree:
      return "dtree";
  }
  return "?";
}

ModelKind ModelKindFromString(const std::string& name) {
  for (ModelKind k : {ModelKind::kSvm, ModelKind::kHmm, ModelKind::kKMeans,
                      ModelKind::kMlp, ModelKind::kDtree}) {
    if (name == ToString(k)) return k;
  }
  throw KindError("unknown model kind '" + name + "'");
}

ModelKind KindOf(const TrainedModel& model) {
  return static_cast<ModelKind>(model.index());
}

std::string SerializeModel(const TrainedModel& model) {
  return json_io::Dump(json_io::ModelToJson(model));
}

TrainedModel DeserializeModel(const std::string& text) {
  return json_io::ModelFromJson(json_io::Parse(text));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

void SaveModel(const TrainedModel& model, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeModel(model));
}

TrainedModel LoadModel(const std::filesystem::path& path) {
  return DeserializeModel(ReadTextFile(path));
}

}  // namespace shadowprobe

#ifndef SHADOWPROBE_MODEL_H_
#define SHADOWPROBE_MODEL_H_

#include <filesystem>
#include <string>
#include <variant>

#include "shadowprobe/dtree.h"
#include "shadowprobe/hmm.h"
#include "shadowprobe/kmeans.h"
#include "shadowprobe/mlp.h"
#include "shadowprobe/svm.h"

namespace shadowprobe {

inline constexpr int kFormatVersion = 1;

enum class ModelKind { kSvm, kHmm, kKMeans, kMlp, kDtree };

// "svm", "hmm", "kmeans", "mlp", "dtree".
const char* ToString(ModelKind kind);
// Throws KindError naming the value.
ModelKind ModelKindFromString(const std::string& name);

// One trained classifier of any supported family.
using TrainedModel =
    std::variant<SvmModel, AcousticModel, KMeansModel, Mlp, DecisionTree>;

ModelKind KindOf(const TrainedModel& model);

// JSON document with top-level "kind" and "format_version". Reals are written
// in shortest round-trip form, so load(save(m)) == m.
std::string SerializeModel(const TrainedModel& model);
// Throws StructuralError on malformed or truncated text, VersionError on an
// unsupported format_version and KindError on an unknown kind.
TrainedModel DeserializeModel(const std::string& text);

void SaveModel(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel LoadModel(const std::filesystem::path& path);

// Whole-file helpers shared by every persisted artifact.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_MODEL_H_

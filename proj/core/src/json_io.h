// Private JSON conversions shared by the serializers in this library.
#ifndef SHADOWPROBE_SRC_JSON_IO_H_
#define SHADOWPROBE_SRC_JSON_IO_H_

#include <string>

#include "json.hpp"
#include "shadowprobe/dtree.h"
#include "shadowprobe/hmm.h"
#include "shadowprobe/kmeans.h"
#include "shadowprobe/mlp.h"
#include "shadowprobe/model.h"
#include "shadowprobe/svm.h"

namespace shadowprobe::json_io {

using Json = nlohmann::ordered_json;

Json MatrixToJson(const Matrix& m);
Matrix MatrixFromJson(const Json& j);

Json SvmToJson(const SvmModel& m);
SvmModel SvmFromJson(const Json& j);
Json HmmToJson(const GaussianHmm& m);
GaussianHmm HmmFromJson(const Json& j);
Json AcousticToJson(const AcousticModel& m);
AcousticModel AcousticFromJson(const Json& j);
Json KMeansToJson(const KMeansModel& m);
KMeansModel KMeansFromJson(const Json& j);
Json MlpToJson(const Mlp& m);
Mlp MlpFromJson(const Json& j);
Json TreeToJson(const DecisionTree& t);
DecisionTree TreeFromJson(const Json& j);

// Full document with "kind" and "format_version".
Json ModelToJson(const TrainedModel& model);
TrainedModel ModelFromJson(const Json& j);

// Checks format_version and that "kind" equals `expected`.
void CheckHeader(const Json& j, const std::string& expected);

// Parses text, mapping parse failures to StructuralError.
Json Parse(const std::string& text);
std::string Dump(const Json& j);

}  // namespace shadowprobe::json_io

#endif  // SHADOWPROBE_SRC_JSON_IO_H_

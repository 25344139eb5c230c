#ifndef SHADOWPROBE_DATASET_H_
#define SHADOWPROBE_DATASET_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "shadowprobe/matrix.h"
#include "shadowprobe/random.h"

namespace shadowprobe {

enum class AttributeKind { kNumeric, kCategorical };

const char* ToString(AttributeKind kind);

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kNumeric;

  bool operator==(const Attribute&) const = default;
};

// A cell: a real for numeric attributes, an interned string for categorical.
using Value = std::variant<double, std::string>;

struct Instance {
  std::vector<Value> values;
  std::optional<std::string> label;

  bool operator==(const Instance&) const = default;
};

// Immutable table of instances sharing one schema. Construction validates
// every row against the schema and, when given, against the label domain.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Attribute> schema, std::vector<Instance> rows,
          std::optional<std::vector<std::string>> label_domain = std::nullopt);

  // Numeric-only dataset from a feature matrix and one label per row.
  static Dataset FromNumeric(std::vector<std::string> names,
                             std::span<const Vector> features,
                             std::span<const std::string> labels);

  const std::vector<Attribute>& schema() const { return schema_; }
  const std::vector<Instance>& rows() const { return rows_; }
  const Instance& row(std::size_t i) const { return rows_[i]; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  // Sorted, de-duplicated. Present iff the dataset was built with one or every
  // row is labeled.
  const std::optional<std::vector<std::string>>& label_domain() const {
    return label_domain_;
  }
  bool labeled() const;

  double Numeric(std::size_t row, std::size_t attribute) const;
  const std::string& Categorical(std::size_t row, std::size_t attribute) const;
  const std::string& Label(std::size_t row) const;

  // Row-wise numeric view. Throws ContractError if any attribute is
  // categorical.
  std::vector<Vector> NumericRows() const;

  Dataset Subset(std::span<const std::size_t> indices) const;
  Dataset WithLabels(std::span<const std::string> labels) const;

  // Stable string identifying the schema (names and kinds).
  std::string SchemaFingerprint() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<Attribute> schema_;
  std::vector<Instance> rows_;
  std::optional<std::vector<std::string>> label_domain_;
};

// CSV input: comma separated, optional header, '.' decimal point. A column is
// numeric when every cell parses as a real, otherwise categorical. The label
// column, if any, is removed from the values and stored as the label.
Dataset LoadDataset(const std::filesystem::path& path, bool has_header,
                    std::optional<std::size_t> label_column);
Dataset ParseDataset(std::istream& in, bool has_header,
                     std::optional<std::size_t> label_column);

// Writes a header row and, for labeled datasets, a trailing "label" column.
// Reals use the shortest representation that round-trips exactly.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);
void WriteDataset(const Dataset& dataset, std::ostream& out);

// Shuffles with `rng`, then the first round(fraction * |ds|) rows form the
// first part.
std::pair<Dataset, Dataset> SplitDataset(const Dataset& dataset,
                                         double fraction, RandomSource& rng);

// Shortest decimal text that parses back to exactly `value`.
std::string FormatReal(double value);

}  // namespace shadowprobe

#endif  // SHADOWPROBE_DATASET_H_

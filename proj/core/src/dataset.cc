#include "shadowprobe/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "shadowprobe/error.h"

namespace shadowprobe {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> SplitCells(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(
        start, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - start);
    cells.emplace_back(Trim(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> ParseReal(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

const char* ToString(AttributeKind kind) {
  return kind == AttributeKind::kNumeric ? "numeric" : "categorical";
}

std::string FormatReal(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error("FormatReal: conversion failed");
  return std::string(buffer, ptr);
}

Dataset::Dataset(std::vector<Attribute> schema, std::vector<Instance> rows,
                 std::optional<std::vector<std::string>> label_domain)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Instance& inst = rows_[r];
    if (inst.values.empty()) {
      throw ContractError("Dataset: row " + std::to_string(r) +
                          " has no values");
    }
    if (inst.values.size() != schema_.size()) {
      throw ContractError("Dataset: row " + std::to_string(r) + " has " +
                          std::to_string(inst.values.size()) +
                          " values, schema has " +
                          std::to_string(schema_.size()));
    }
    for (std::size_t a = 0; a < schema_.size(); ++a) {
      const bool numeric = std::holds_alternative<double>(inst.values[a]);
      if (numeric != (schema_[a].kind == AttributeKind::kNumeric)) {
        throw ContractError("Dataset: row " + std::to_string(r) +
                            " attribute '" + schema_[a].name +
                            "' does not match its kind");
      }
    }
  }
  if (label_domain) {
    std::vector<std::string> domain = std::move(*label_domain);
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto& label = rows_[r].label;
      if (!label || !std::binary_search(domain.begin(), domain.end(), *label)) {
        throw ContractError("Dataset: row " + std::to_string(r) +
                            " label outside the label domain");
      }
    }
    label_domain_ = std::move(domain);
  } else if (!rows_.empty() &&
             std::all_of(rows_.begin(), rows_.end(),
                         [](const Instance& i) { return i.label.has_value(); })) {
    std::set<std::string> seen;
    for (const Instance& inst : rows_) seen.insert(*inst.label);
    label_domain_ = std::vector<std::string>(seen.begin(), seen.end());
  }
}

Dataset Dataset::FromNumeric(std::vector<std::string> names,
                             std::span<const Vector> features,
                             std::span<const std::string> labels) {
  if (!labels.empty() && labels.size() != features.size()) {
    throw ContractError("Dataset::FromNumeric: label count mismatch");
  }
  std::vector<Attribute> schema;
  schema.reserve(names.size());
  for (auto& name : names) {
    schema.push_back({std::move(name), AttributeKind::kNumeric});
  }
  std::vector<Instance> rows;
  rows.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    Instance inst;
    inst.values.assign(features[i].begin(), features[i].end());
    if (!labels.empty()) inst.label = labels[i];
    rows.push_back(std::move(inst));
  }
  return Dataset(std::move(schema), std::move(rows));
}

bool Dataset::labeled() const {
  return label_domain_.has_value() && !rows_.empty();
}

double Dataset::Numeric(std::size_t row, std::size_t attribute) const {
  return std::get<double>(rows_[row].values[attribute]);
}

const std::string& Dataset::Categorical(std::size_t row,
                                        std::size_t attribute) const {
  return std::get<std::string>(rows_[row].values[attribute]);
}

const std::string& Dataset::Label(std::size_t row) const {
  const auto& label = rows_[row].label;
  if (!label) throw ContractError("Dataset: row is unlabeled");
  return *label;
}

std::vector<Vector> Dataset::NumericRows() const {
  for (const Attribute& a : schema_) {
    if (a.kind != AttributeKind::kNumeric) {
      throw ContractError("Dataset: attribute '" + a.name +
                          "' is categorical, numeric rows required");
    }
  }
  std::vector<Vector> out;
  out.reserve(rows_.size());
  for (const Instance& inst : rows_) {
    Vector v(inst.values.size());
    for (std::size_t a = 0; a < v.size(); ++a) v[a] = std::get<double>(inst.values[a]);
    out.push_back(std::move(v));
  }
  return out;
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  std::vector<Instance> rows;
  rows.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows_.size()) throw ContractError("Dataset::Subset: bad index");
    rows.push_back(rows_[i]);
  }
  return Dataset(schema_, std::move(rows), label_domain_);
}

Dataset Dataset::WithLabels(std::span<const std::string> labels) const {
  if (labels.size() != rows_.size()) {
    throw ContractError("Dataset::WithLabels: label count mismatch");
  }
  std::vector<Instance> rows = rows_;
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].label = labels[i];
  return Dataset(schema_, std::move(rows));
}

std::string Dataset::SchemaFingerprint() const {
  std::string out;
  for (const Attribute& a : schema_) {
    out += a.name;
    out += a.kind == AttributeKind::kNumeric ? ":n;" : ":c;";
  }
  return out;
}

Dataset ParseDataset(std::istream& in, bool has_header,
                     std::optional<std::size_t> label_column) {
  std::vector<std::vector<std::string>> table;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    std::vector<std::string> cells = SplitCells(line);
    if (has_header && header.empty() && table.empty()) {
      header = std::move(cells);
      continue;
    }
    table.push_back(std::move(cells));
    line_numbers.push_back(line_number);
  }
  if (in.bad()) throw IoError("ParseDataset: read failure");
  if (table.empty()) throw StructuralError("dataset has no data rows");

  const std::size_t width = header.empty() ? table.front().size() : header.size();
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (table[r].size() != width) {
      throw StructuralError("ragged row " + std::to_string(line_numbers[r]) +
                                ": expected " + std::to_string(width) +
                                " cells, found " +
                                std::to_string(table[r].size()),
                            line_numbers[r]);
    }
  }
  if (label_column && *label_column >= width) {
    throw ContractError("ParseDataset: label column out of range");
  }
  if (width == 1 && label_column) {
    throw StructuralError("dataset has no attribute columns");
  }

  std::vector<Attribute> schema;
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < width; ++c) {
    if (label_column && c == *label_column) continue;
    bool numeric = true;
    for (const auto& row : table) {
      if (!ParseReal(row[c])) {
        numeric = false;
        break;
      }
    }
    std::string name = header.empty() ? "a" + std::to_string(c) : header[c];
    schema.push_back({std::move(name), numeric ? AttributeKind::kNumeric
                                               : AttributeKind::kCategorical});
    columns.push_back(c);
  }

  std::vector<Instance> rows;
  rows.reserve(table.size());
  for (auto& cells : table) {
    Instance inst;
    inst.values.reserve(columns.size());
    for (std::size_t a = 0; a < columns.size(); ++a) {
      std::string& cell = cells[columns[a]];
      if (schema[a].kind == AttributeKind::kNumeric) {
        inst.values.emplace_back(*ParseReal(cell));
      } else {
        inst.values.emplace_back(std::move(cell));
      }
    }
    if (label_column) inst.label = std::move(cells[*label_column]);
    rows.push_back(std::move(inst));
  }
  return Dataset(std::move(schema), std::move(rows));
}

Dataset LoadDataset(const std::filesystem::path& path, bool has_header,
                    std::optional<std::size_t> label_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");
  return ParseDataset(in, has_header, label_column);
}

void WriteDataset(const Dataset& dataset, std::ostream& out) {
  const bool labeled = dataset.labeled();
  auto check_cell = [](const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) {
      throw ContractError("SaveDataset: cell '" + s +
                          "' contains a separator character");
    }
  };
  for (std::size_t a = 0; a < dataset.schema().size(); ++a) {
    if (a > 0) out << ',';
    check_cell(dataset.schema()[a].name);
    out << dataset.schema()[a].name;
  }
  if (labeled) out << ",label";
  out << '\n';
  for (const Instance& inst : dataset.rows()) {
    for (std::size_t a = 0; a < inst.values.size(); ++a) {
      if (a > 0) out << ',';
      if (const double* d = std::get_if<double>(&inst.values[a])) {
        out << FormatReal(*d);
      } else {
        const auto& s = std::get<std::string>(inst.values[a]);
        check_cell(s);
        out << s;
      }
    }
    if (labeled) {
      check_cell(*inst.label);
      out << ',' << *inst.label;
    }
    out << '\n';
  }
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file '" + path.string() + "'");
  WriteDataset(dataset, out);
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset& dataset,
                                         double fraction, RandomSource& rng) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError("SplitDataset: fraction must lie in (0, 1)");
  }
  if (dataset.empty()) throw ContractError("SplitDataset: empty dataset");
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(order);
  const auto first_size = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(dataset.size())));
  std::span<const std::size_t> all(order);
  return {dataset.Subset(all.first(first_size)),
          dataset.Subset(all.subspan(first_size))};
}

}  // namespace shadowprobe

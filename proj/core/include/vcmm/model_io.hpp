#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vcmm/matrix.hpp"
#include "vcmm/mixture.hpp"
#include "vcmm/pipeline.hpp"

namespace vcmm {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
  MixtureModel model;
  FitTrace trace;
};

/// JSON text. Variables are numbered from 1 in the file.
std::string serialize_model(const MixtureModel& model, const FitTrace& trace);

/// Throws SchemaError on malformed or inconsistent input.
ModelFile parse_model(const std::string& text);

struct Dataset {
  std::vector<std::string> names;
  Matrix x;
};

/// Header row followed by numeric rows. Throws IngestionError naming the
/// 1-based data row and column of the first bad cell.
Dataset read_csv(std::istream& is);

/// Removes the named column and returns it as 0-based labels (file labels
/// start at 1). Throws IngestionError if the column is missing.
Partition extract_label_column(Dataset& data, const std::string& name);

/// One 1-based integer label per line; returns 0-based labels.
Partition read_partition(std::istream& is);

void write_partition(std::ostream& os, const Partition& labels);
void write_csv(std::ostream& os, const std::vector<std::string>& names, const Matrix& x);

/// Columns: row,label,post_1..post_k. Rows and labels are 1-based.
void write_assignment(std::ostream& os, const Partition& labels, const Matrix& posterior);

}  // namespace vcmm

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "confspec/fields.hpp"

namespace confspec {

/// Binary field container.
///
/// Layout (all little-endian):
///   bytes 0-3   magic "CSF1"
///   uint32      dim n
///   uint32[n]   per-axis resolution
///   float64[n]  per-axis period
///   uint32      field rank (0 scalar, 1 covector, 2 symmetric tensor)
///   float64[]   values, node-major (row-major nodes, axis 0 slowest), with the
///               components of each node contiguous; rank-2 components follow
///               upper-triangular row-major order (00, 01, ..., 0n-1, 11, ...)
struct RawField {
  int rank = 0;
  FieldData data;
};

void write_field(std::ostream& out, const FieldData& field, int rank);
RawField read_field(std::istream& in);

void save_field(const std::filesystem::path& path, const ScalarField& f);
void save_field(const std::filesystem::path& path, const CovectorField& f);
void save_field(const std::filesystem::path& path, const SymTensorField& f);
void save_field(const std::filesystem::path& path, const MetricField& g);

ScalarField load_scalar_field(const std::filesystem::path& path);
CovectorField load_covector_field(const std::filesystem::path& path);
SymTensorField load_sym_tensor_field(const std::filesystem::path& path);
MetricField load_metric_field(const std::filesystem::path& path);

/// CSV export: one row per node with coordinates x0..x{n-1} then components.
void write_field_csv(std::ostream& out, const FieldData& field, int rank);

} // namespace confspec

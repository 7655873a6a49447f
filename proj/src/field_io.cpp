#include "confspec/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "confspec/error.hpp"

namespace confspec {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field I/O assumes a little-endian host");

constexpr char magic[4] = {'C', 'S', 'F', '1'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(ErrorKind::FormatError, "field file truncated");
  return v;
}

int components_for(int rank, int dim) {
  switch (rank) {
  case 0: return 1;
  case 1: return dim;
  case 2: return dim * (dim + 1) / 2;
  default: fail(ErrorKind::FormatError, "unsupported field rank " + std::to_string(rank));
  }
}

RawField load(const std::filesystem::path& path, int expected_rank) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::FormatError, "cannot open " + path.string());
  RawField raw = read_field(in);
  if (raw.rank != expected_rank)
    fail(ErrorKind::FormatError, path.string() + ": expected rank " +
                                     std::to_string(expected_rank) + ", found " +
                                     std::to_string(raw.rank));
  return raw;
}

void save(const std::filesystem::path& path, const FieldData& f, int rank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::FormatError, "cannot write " + path.string());
  write_field(out, f, rank);
}

} // namespace

void write_field(std::ostream& out, const FieldData& field, int rank) {
  const Grid& grid = field.grid();
  if (components_for(rank, grid.dim()) != field.components())
    fail(ErrorKind::FormatError, "rank does not match component count");
  out.write(magic, 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.dim()));
  for (int n : grid.resolution()) put<std::uint32_t>(out, static_cast<std::uint32_t>(n));
  for (double l : grid.period()) put<double>(out, l);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(rank));
  const auto v = field.values();
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

RawField read_field(std::istream& in) {
  char m[4];
  in.read(m, 4);
  if (!in || std::memcmp(m, magic, 4) != 0) fail(ErrorKind::FormatError, "bad magic, not a CSF1 file");
  const auto dim = get<std::uint32_t>(in);
  if (dim < 1 || dim > static_cast<std::uint32_t>(Grid::max_dim))
    fail(ErrorKind::FormatError, "unsupported dimension");
  std::vector<int> res(dim);
  std::vector<double> period(dim);
  for (auto& n : res) n = static_cast<int>(get<std::uint32_t>(in));
  for (auto& l : period) l = get<double>(in);
  const auto rank = static_cast<int>(get<std::uint32_t>(in));
  Grid grid(res, period);
  const int comps = components_for(rank, grid.dim());
  std::vector<double> values(grid.size() * comps);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) fail(ErrorKind::FormatError, "field file truncated");
  return {rank, FieldData(grid, comps, std::move(values))};
}

void save_field(const std::filesystem::path& path, const ScalarField& f) { save(path, f, 0); }
void save_field(const std::filesystem::path& path, const CovectorField& f) { save(path, f, 1); }
void save_field(const std::filesystem::path& path, const SymTensorField& f) { save(path, f, 2); }
void save_field(const std::filesystem::path& path, const MetricField& g) {
  save(path, g.tensor(), 2);
}

ScalarField load_scalar_field(const std::filesystem::path& path) {
  RawField raw = load(path, 0);
  return ScalarField(raw.data.grid(), raw.data.data());
}

CovectorField load_covector_field(const std::filesystem::path& path) {
  RawField raw = load(path, 1);
  return CovectorField(raw.data.grid(), raw.data.data());
}

SymTensorField load_sym_tensor_field(const std::filesystem::path& path) {
  RawField raw = load(path, 2);
  return SymTensorField(raw.data.grid(), raw.data.data());
}

MetricField load_metric_field(const std::filesystem::path& path) {
  return MetricField(load_sym_tensor_field(path));
}

void write_field_csv(std::ostream& out, const FieldData& field, int rank) {
  const Grid& grid = field.grid();
  const int n = grid.dim();
  for (int a = 0; a < n; ++a) out << "x" << a << ",";
  if (rank == 2) {
    bool first = true;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        out << (first ? "" : ",") << "c" << i << j;
        first = false;
      }
  } else {
    for (int c = 0; c < field.components(); ++c) out << (c ? "," : "") << "c" << c;
  }
  out << "\n" << std::setprecision(17);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    for (int a = 0; a < n; ++a) out << grid.coordinate(node, a) << ",";
    for (int c = 0; c < field.components(); ++c) out << (c ? "," : "") << field.at(node, c);
    out << "\n";
  }
}

} // namespace confspec

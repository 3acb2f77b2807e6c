#include "pgu/ensemble_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <iomanip>
#include <iterator>
#include <limits>

#include "pgu/error.hpp"

namespace pgu {
namespace {

constexpr char kMagic[4] = {'P', 'G', 'U', 'E'};

template <class T>
void put_le(std::vector<std::uint8_t>& buf, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<std::uint8_t>(u & 0xff));
    u = static_cast<U>(u >> 8);
  }
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& data, const std::string& name) : data_(data), name_(name) {}

  template <class T>
  T get_le() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError(name_ + ": truncated ensemble file");
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_ensemble(const std::filesystem::path& path, const Ensemble& ens) {
  const auto& g = ens.grid();
  if (ens.n_vars() > std::numeric_limits<std::uint16_t>::max())
    throw FormatError("too many variables for the ensemble format");
  std::vector<std::uint8_t> buf;
  buf.reserve(64 + ens.values().size() * 4);
  buf.insert(buf.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(buf, kEnsembleFormatVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(ens.n_real()));
  put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(ens.n_vars()));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nx));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.ny));
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.nz));
  for (const auto& name : ens.names()) {
    if (name.size() > 255) throw FormatError("variable name longer than 255 bytes: " + name);
    buf.push_back(static_cast<std::uint8_t>(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
  }
  for (const double v : ens.values()) {
    put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  for (const auto& section : ens.aux) {
    if (section.tag.size() != 4) throw FormatError("aux section tag must be 4 bytes");
    buf.insert(buf.end(), section.tag.begin(), section.tag.end());
    put_le<std::uint64_t>(buf, section.bytes.size());
    buf.insert(buf.end(), section.bytes.begin(), section.bytes.end());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Ensemble read_ensemble(const std::filesystem::path& path, const std::optional<GridSpec>& bound) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ensemble file " + path.string());
  const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
  Reader rd(data, path.string());
  if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
    throw FormatError(path.string() + ": not an ensemble file (bad magic)");
  rd.skip(4);
  const auto version = rd.get_le<std::uint16_t>();
  if (version != kEnsembleFormatVersion)
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(version));
  const auto n_real = rd.get_le<std::uint32_t>();
  const auto n_vars = rd.get_le<std::uint16_t>();
  GridSpec grid;
  grid.nx = rd.get_le<std::uint32_t>();
  grid.ny = rd.get_le<std::uint32_t>();
  grid.nz = rd.get_le<std::uint32_t>();
  if (grid.nx == 0 || grid.ny == 0 || grid.nz == 0)
    throw FormatError(path.string() + ": zero grid dimension");
  if (bound) {
    if (bound->nx != grid.nx || bound->ny != grid.ny || bound->nz != grid.nz)
      throw FormatError(path.string() + ": grid dimensions do not match the configured grid");
    grid = *bound;
  }
  std::vector<std::string> names;
  for (std::uint16_t v = 0; v < n_vars; ++v) {
    const auto len = rd.get_le<std::uint8_t>();
    names.push_back(rd.get_string(len));
  }
  Ensemble ens(grid, n_real, std::move(names));
  rd.need(ens.values().size() * 4);
  for (auto& v : ens.values()) v = static_cast<double>(std::bit_cast<float>(rd.get_le<std::uint32_t>()));
  while (!rd.at_end()) {
    AuxSection section;
    section.tag = rd.get_string(4);
    const auto len = rd.get_le<std::uint64_t>();
    rd.need(static_cast<std::size_t>(len));
    section.bytes.assign(data.begin() + static_cast<std::ptrdiff_t>(rd.pos()),
                         data.begin() + static_cast<std::ptrdiff_t>(rd.pos() + len));
    rd.skip(static_cast<std::size_t>(len));
    ens.aux.push_back(std::move(section));
  }
  return ens;
}

void write_raster_csv(const std::filesystem::path& path, const GridSpec& grid,
                      std::span<const double> values) {
  if (values.size() != grid.size()) throw DataError("raster size does not match grid");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(9);
  for (std::size_t row = 0; row < grid.ny * grid.nz; ++row) {
    for (std::size_t x = 0; x < grid.nx; ++x) {
      if (x) out << ',';
      out << values[row * grid.nx + x];
    }
    out << '\n';
  }
}

std::vector<double> read_raster_csv(const std::filesystem::path& path, const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  values.reserve(grid.size());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw DataError(path.string() + ": row " + std::to_string(row) + ": bad cell '" + cell + "'");
      }
      ++cols;
    }
    if (cols != grid.nx)
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cols) +
                      " columns, expected " + std::to_string(grid.nx));
  }
  if (values.size() != grid.size()) throw DataError(path.string() + ": raster does not match the grid");
  return values;
}

void write_raster_pgm(const std::filesystem::path& path, const GridSpec& grid,
                      std::span<const double> values, std::optional<double> lo,
                      std::optional<double> hi) {
  if (values.size() != grid.size()) throw DataError("raster size does not match grid");
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const double v : values) {
    if (!std::isfinite(v)) continue;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const double a = lo.value_or(vmin), b = hi.value_or(vmax);
  const double span = b > a ? b - a : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << grid.nx << ' ' << grid.ny * grid.nz << "\n65535\n";
  for (const double v : values) {
    const double t = std::isfinite(v) ? std::clamp((v - a) / span, 0.0, 1.0) : 0.0;
    const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    const char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    out.write(bytes, 2);
  }
}

}  // namespace pgu

#pragma once

// Serialisation of orbits, ensembles, histograms and density lattices.
//
// CSV: header row, then one row per state "index,x1,...,xd" (17 significant
// digits, so values round-trip exactly).
//
// Binary dump, little-endian:
//   offset 0   4 bytes  magic "GDCS"
//   offset 4   uint32   format version (1)
//   offset 8   uint32   dimension d
//   offset 12  uint64   state count n
//   offset 20  n*d      float64 values, state-major

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gdchaos/dynamics.hpp"

namespace gdchaos::io {

inline constexpr std::array<char, 4> kBinaryMagic = {'G', 'D', 'C', 'S'};
inline constexpr std::uint32_t kBinaryVersion = 1;

/// States stored flat with their dimension; the common payload of orbits and ensembles.
struct StateTable {
  std::size_t dim = 1;
  std::vector<double> values;
  std::size_t size() const { return values.size() / dim; }
};

inline StateTable table_of(const Orbit& o) { return {o.dim, o.x}; }
inline StateTable table_of(const Ensemble& e) { return {e.dim, e.x}; }

inline void write_csv(std::ostream& os, const StateTable& t, std::uint64_t first_index = 0,
                      std::uint64_t index_step = 1) {
  os << "index";
  for (std::size_t k = 0; k < t.dim; ++k) os << ",x" << (k + 1);
  os << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << first_index + i * index_step;
    for (std::size_t k = 0; k < t.dim; ++k) os << ',' << t.values[i * t.dim + k];
    os << '\n';
  }
}

inline void write_csv(std::ostream& os, const Orbit& o) {
  write_csv(os, table_of(o), o.burn_in, o.thin);
}

inline StateTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty input");
  StateTable t;
  t.dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (t.dim == 0 || line.rfind("index", 0) != 0) throw std::runtime_error("csv: bad header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::size_t cols = 0;
    while (std::getline(row, cell, ',')) {
      t.values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != t.dim) throw std::runtime_error("csv: ragged row");
  }
  return t;
}

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), sizeof(T)))
    throw std::runtime_error("binary dump: truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

}  // namespace detail

inline void write_binary(std::ostream& os, const StateTable& t) {
  os.write(kBinaryMagic.data(), kBinaryMagic.size());
  detail::put_le<std::uint32_t>(os, kBinaryVersion);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim));
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(t.size()));
  for (double v : t.values) detail::put_le<double>(os, v);
}

inline StateTable read_binary(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kBinaryMagic)
    throw std::runtime_error("binary dump: bad magic");
  const auto version = detail::get_le<std::uint32_t>(is);
  if (version != kBinaryVersion)
    throw std::runtime_error("binary dump: unsupported version " + std::to_string(version));
  StateTable t;
  t.dim = detail::get_le<std::uint32_t>(is);
  if (t.dim == 0) throw std::runtime_error("binary dump: zero dimension");
  const auto count = detail::get_le<std::uint64_t>(is);
  t.values.resize(count * t.dim);
  for (double& v : t.values) v = detail::get_le<double>(is);
  return t;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << content;
}

}  // namespace gdchaos::io

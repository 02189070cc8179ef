#pragma once

// Dataset files. Two encodings share one logical layout: a header (D, L,
// count) followed by `count` rows of D features and one integer label.
//
// CSV (".csv"): the first line is "D,L,count"; every following non-empty
// line is "f_1,...,f_D,label" with features in decimal notation.
//
// Binary (any other extension), all little-endian:
//   u32 D | u32 L | u64 count | count × (D × f32 features, i32 label)
// No padding, no trailer. See docs/formats.md.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "fedsd/dataset.hpp"
#include "fedsd/error.hpp"

namespace fedsd {

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw DataError("unexpected end of binary file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line_no) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(text) + "'");
  return value;
}

inline bool is_csv_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv";
}

}  // namespace detail

inline LabeledDataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line != "\r") break;
  }
  const auto header = detail::split_csv(line);
  if (header.size() != 3) throw DataError("CSV header must be 'D,L,count'");
  const auto dim = detail::parse_number<std::size_t>(header[0], line_no);
  const auto classes = detail::parse_number<std::size_t>(header[1], line_no);
  const auto count = detail::parse_number<std::size_t>(header[2], line_no);
  if (dim == 0 || classes == 0) throw DataError("CSV header: D and L must be positive");

  LabeledDataset data(dim, classes);
  data.reserve(count);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != dim + 1)
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                      " fields, found " + std::to_string(fields.size()));
    Sample s;
    s.features.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) s.features[j] = detail::parse_number<double>(fields[j], line_no);
    s.label = detail::parse_number<int>(fields[dim], line_no);
    data.add(std::move(s));
  }
  if (data.size() != count)
    throw DataError("CSV header declares " + std::to_string(count) + " rows, found " +
                    std::to_string(data.size()));
  return data;
}

inline void write_dataset_csv(std::ostream& out, const LabeledDataset& data) {
  out << data.dim() << ',' << data.num_classes() << ',' << data.size() << '\n';
  out << std::setprecision(17);
  for (const auto& s : data) {
    for (double f : s.features) out << f << ',';
    out << s.label << '\n';
  }
}

inline LabeledDataset read_dataset_binary(std::istream& in) {
  const auto dim = detail::get_le<std::uint32_t>(in);
  const auto classes = detail::get_le<std::uint32_t>(in);
  const auto count = detail::get_le<std::uint64_t>(in);
  if (dim == 0 || classes == 0) throw DataError("binary header: D and L must be positive");
  LabeledDataset data(dim, classes);
  data.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.features.resize(dim);
    for (auto& f : s.features) f = detail::get_le<float>(in);
    s.label = detail::get_le<std::int32_t>(in);
    data.add(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after last row");
  return data;
}

inline void write_dataset_binary(std::ostream& out, const LabeledDataset& data) {
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_classes()));
  detail::put_le<std::uint64_t>(out, data.size());
  for (const auto& s : data) {
    for (double f : s.features) detail::put_le<float>(out, static_cast<float>(f));
    detail::put_le<std::int32_t>(out, s.label);
  }
}

inline LabeledDataset load_dataset(const std::filesystem::path& path) {
  const bool csv = detail::is_csv_path(path);
  std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  try {
    return csv ? read_dataset_csv(in) : read_dataset_binary(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline void save_dataset(const std::filesystem::path& path, const LabeledDataset& data) {
  const bool csv = detail::is_csv_path(path);
  std::ofstream out(path, csv ? std::ios::out : std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  csv ? write_dataset_csv(out, data) : write_dataset_binary(out, data);
}

}  // namespace fedsd

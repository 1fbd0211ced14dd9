#include "snerv/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace snerv::io {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian");

using nlohmann::json;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw MissingInput("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw MissingInput("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what(),
                      static_cast<std::uint64_t>(e.byte));
  }
  return j;
}

static std::string read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

static fs::path with_ext(const fs::path& base, const char* ext) {
  fs::path p = base;
  p += ext;
  return p;
}

void write_stack(const MultispectralStack& stack, const fs::path& base) {
  stack.validate();
  json header = {{"magic", "MSD1"},
                 {"height", stack.height},
                 {"width", stack.width},
                 {"wavelengths_nm", stack.grid.values()},
                 {"pixel_spacing_mm", stack.pixel_spacing_mm},
                 {"dtype", "f32le"}};
  std::string payload(reinterpret_cast<const char*>(stack.data.data()),
                      stack.data.size() * sizeof(float));
  std::string mask(reinterpret_cast<const char*>(stack.valid_mask.data()),
                   stack.valid_mask.size());
  write_file_atomic(with_ext(base, ".raw"), payload);
  write_file_atomic(with_ext(base, ".mask"), mask);
  write_json_atomic(with_ext(base, ".json"), header);
}

MultispectralStack read_stack(const fs::path& base) {
  json header = read_json(with_ext(base, ".json"));
  if (header.value("magic", "") != std::string("MSD1"))
    throw FormatError(base.string() + ": bad magic", 0);
  if (header.value("dtype", "") != std::string("f32le"))
    throw FormatError(base.string() + ": unsupported dtype", 0);
  MultispectralStack stack;
  stack.height = header.at("height").get<int>();
  stack.width = header.at("width").get<int>();
  stack.pixel_spacing_mm = header.at("pixel_spacing_mm").get<double>();
  stack.grid = WavelengthGrid(header.at("wavelengths_nm").get<std::vector<double>>());
  if (stack.height <= 0 || stack.width <= 0)
    throw DimensionMismatch(base.string() + ": non-positive dimensions");

  const std::size_t npx = stack.n_pixels();
  const std::size_t L = stack.grid.size();
  std::string payload = read_bytes(with_ext(base, ".raw"));
  const std::size_t expected = npx * L * sizeof(float);
  if (payload.size() != expected) {
    // A whole number of full image planes is a header/payload disagreement;
    // anything else is a corrupt or truncated file.
    if (payload.size() % (npx * sizeof(float)) == 0)
      throw DimensionMismatch(
          base.string() + ": header declares " + std::to_string(L) +
          " wavelengths, payload has " +
          std::to_string(payload.size() / (npx * sizeof(float))) + " planes");
    throw FormatError(base.string() + ": truncated or oversized payload",
                      payload.size());
  }
  stack.data.resize(npx * L);
  std::memcpy(stack.data.data(), payload.data(), payload.size());

  std::string mask = read_bytes(with_ext(base, ".mask"));
  if (mask.size() != npx)
    throw FormatError(base.string() + ": valid_mask size mismatch", mask.size());
  stack.valid_mask.assign(mask.begin(), mask.end());
  stack.validate();
  return stack;
}

void write_mask(const RoiMask& mask, const fs::path& base) {
  json header = {{"magic", "MSK1"},
                 {"label", mask.label},
                 {"height", mask.height},
                 {"width", mask.width}};
  std::string payload(reinterpret_cast<const char*>(mask.mask.data()),
                      mask.mask.size());
  write_file_atomic(with_ext(base, ".raw"), payload);
  write_json_atomic(with_ext(base, ".json"), header);
}

RoiMask read_mask(const fs::path& base) {
  json header = read_json(with_ext(base, ".json"));
  if (header.value("magic", "") != std::string("MSK1"))
    throw FormatError(base.string() + ": bad magic", 0);
  RoiMask mask;
  mask.label = header.value("label", "");
  mask.height = header.at("height").get<int>();
  mask.width = header.at("width").get<int>();
  std::string payload = read_bytes(with_ext(base, ".raw"));
  const std::size_t npx =
      static_cast<std::size_t>(mask.height) * mask.width;
  if (payload.size() != npx)
    throw FormatError(base.string() + ": mask size mismatch", payload.size());
  mask.mask.assign(payload.begin(), payload.end());
  return mask;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

static std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

ChromophoreLibrary read_library_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw MissingInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line))
    throw FormatError(path.string() + ": empty file", 0);
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "wavelength_nm")
    throw FormatError(path.string() + ": header must start with wavelength_nm",
                      0);
  const std::size_t ncols = header.size();
  std::vector<double> wavelengths;
  std::vector<std::vector<double>> cols(ncols - 1);
  std::uint64_t offset = line.size() + 1;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncols)
      throw FormatError(path.string() + ": row has wrong column count", offset);
    try {
      wavelengths.push_back(std::stod(cells[0]));
      for (std::size_t c = 1; c < ncols; ++c)
        cols[c - 1].push_back(std::stod(cells[c]));
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": non-numeric cell", offset);
    }
    offset += line.size() + 1;
  }
  ChromophoreLibrary lib;
  lib.wavelengths_nm = wavelengths;
  for (std::size_t c = 1; c < ncols; ++c) {
    Spectrum s(static_cast<Eigen::Index>(wavelengths.size()));
    for (std::size_t i = 0; i < wavelengths.size(); ++i)
      s[static_cast<Eigen::Index>(i)] = cols[c - 1][i];
    lib.add(header[c], s);
  }
  return lib;
}

void write_library_csv(const ChromophoreLibrary& lib, const fs::path& path) {
  std::ostringstream out;
  out << "wavelength_nm";
  for (const auto& name : lib.names()) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < lib.wavelengths_nm.size(); ++i) {
    out << format_double(lib.wavelengths_nm[i]);
    for (const auto& s : lib.spectra())
      out << "," << format_double(s[static_cast<Eigen::Index>(i)]);
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

void write_matrix(const Matrix& m, const fs::path& base, const json& extra) {
  json header = extra;
  header["magic"] = "MSDM1";
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  header["dtype"] = "f64le";
  std::string payload(static_cast<std::size_t>(m.size()) * sizeof(double), 0);
  // row-major on disk
  double* p = reinterpret_cast<double*>(payload.data());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) *p++ = m(r, c);
  write_file_atomic(with_ext(base, ".raw"), payload);
  write_json_atomic(with_ext(base, ".json"), header);
}

Matrix read_matrix(const fs::path& base, json* header_out) {
  json header = read_json(with_ext(base, ".json"));
  if (header.value("magic", "") != std::string("MSDM1") ||
      header.value("dtype", "") != std::string("f64le"))
    throw FormatError(base.string() + ": bad matrix header", 0);
  const auto rows = header.at("rows").get<Eigen::Index>();
  const auto cols = header.at("cols").get<Eigen::Index>();
  std::string payload = read_bytes(with_ext(base, ".raw"));
  const std::size_t expected =
      static_cast<std::size_t>(rows) * cols * sizeof(double);
  if (payload.size() != expected)
    throw FormatError(base.string() + ": matrix payload size mismatch",
                      payload.size());
  Matrix m(rows, cols);
  const double* p = reinterpret_cast<const double*>(payload.data());
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = *p++;
  if (header_out) *header_out = header;
  return m;
}

void write_bool_matrix(const BoolMatrix& m, const fs::path& base,
                       const json& extra) {
  json header = extra;
  header["magic"] = "MSDM1";
  header["rows"] = m.rows();
  header["cols"] = m.cols();
  header["dtype"] = "u8";
  std::string payload(static_cast<std::size_t>(m.size()), 0);
  char* p = payload.data();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      *p++ = static_cast<char>(m(r, c));
  write_file_atomic(with_ext(base, ".raw"), payload);
  write_json_atomic(with_ext(base, ".json"), header);
}

BoolMatrix read_bool_matrix(const fs::path& base, json* header_out) {
  json header = read_json(with_ext(base, ".json"));
  if (header.value("magic", "") != std::string("MSDM1") ||
      header.value("dtype", "") != std::string("u8"))
    throw FormatError(base.string() + ": bad matrix header", 0);
  const auto rows = header.at("rows").get<Eigen::Index>();
  const auto cols = header.at("cols").get<Eigen::Index>();
  std::string payload = read_bytes(with_ext(base, ".raw"));
  if (payload.size() != static_cast<std::size_t>(rows) * cols)
    throw FormatError(base.string() + ": matrix payload size mismatch",
                      payload.size());
  BoolMatrix m(rows, cols);
  const char* p = payload.data();
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<std::uint8_t>(*p++);
  if (header_out) *header_out = header;
  return m;
}

}  // namespace snerv::io

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "snerv/types.hpp"

namespace snerv::io {

namespace fs = std::filesystem;

// Atomic write: temp file in the same directory, then rename.
void write_file_atomic(const fs::path& path, const std::string& content);
void write_json_atomic(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

// MSD stack container: <base>.json header, <base>.raw f32le payload in
// row-major [row][col][wavelength] order, <base>.mask 0/1 bytes.
void write_stack(const MultispectralStack& stack, const fs::path& base);
MultispectralStack read_stack(const fs::path& base);

// ROI mask: <base>.json header with the label, <base>.raw 0/1 bytes.
void write_mask(const RoiMask& mask, const fs::path& base);
RoiMask read_mask(const fs::path& base);

// Chromophore library CSV: header "wavelength_nm,<name1>,<name2>,...".
ChromophoreLibrary read_library_csv(const fs::path& path);
void write_library_csv(const ChromophoreLibrary& lib, const fs::path& path);

// Generic matrix container (MSD-style): <base>.json header
// {magic:"MSDM1", rows, cols, dtype:"f64le", ...extra}, <base>.raw payload.
void write_matrix(const Matrix& m, const fs::path& base,
                  const nlohmann::json& extra = nlohmann::json::object());
Matrix read_matrix(const fs::path& base, nlohmann::json* header = nullptr);

// Same container with dtype "u8" for boolean matrices.
void write_bool_matrix(const BoolMatrix& m, const fs::path& base,
                       const nlohmann::json& extra = nlohmann::json::object());
BoolMatrix read_bool_matrix(const fs::path& base,
                            nlohmann::json* header = nullptr);

// Shortest decimal representation that round-trips a double.
std::string format_double(double v);

}  // namespace snerv::io

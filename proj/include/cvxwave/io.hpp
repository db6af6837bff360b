#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvxwave/grid.hpp"

namespace cvxwave::io {

namespace fs = std::filesystem;

nlohmann::json grid_to_json(const Grid3& g);
Grid3 grid_from_json(const nlohmann::json& j);

/// Legacy VTK ASCII STRUCTURED_POINTS, one SCALARS array.
void write_vtk(const fs::path& path, const ScalarField& f, const std::string& name = "c");

/// Raw format: `<stem>.json` sidecar {dims, origin, spacing, component_count} plus
/// `<stem>.bin` little-endian float64, component-major, x fastest.
void write_raw(const fs::path& stem, std::span<const ScalarField> comps);
void write_raw(const fs::path& stem, const ScalarField& f);
std::vector<ScalarField> read_raw(const fs::path& stem);

void write_f64(const fs::path& path, std::span<const double> values);
void append_f64(std::ofstream& out, std::span<const double> values);
std::vector<double> read_f64(const fs::path& path);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// Mid-plane slice as a CSV matrix and an 8-bit grayscale PGM scaled to [lo, hi].
void write_slice_csv(const fs::path& path, const std::vector<std::vector<double>>& rows);
void write_slice_pgm(const fs::path& path, const std::vector<std::vector<double>>& rows, double lo,
                     double hi);

/// 64-bit FNV-1a of a file's bytes, as hex.
std::string file_hash(const fs::path& path);

} // namespace cvxwave::io

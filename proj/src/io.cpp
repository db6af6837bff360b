#include "cvxwave/io.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "cvxwave/error.hpp"

namespace cvxwave::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw float64 files are written in host order; big-endian hosts are unsupported");

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

fs::path with_ext(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

} // namespace

nlohmann::json grid_to_json(const Grid3& g) {
  return {{"dims", g.dims()}, {"origin", g.origin()}, {"spacing", g.h()}};
}

Grid3 grid_from_json(const nlohmann::json& j) {
  return Grid3(j.at("origin").get<Vec3>(), j.at("spacing").get<double>(),
               j.at("dims").get<Index3>());
}

void write_vtk(const fs::path& path, const ScalarField& f, const std::string& name) {
  auto out = open_out(path);
  const Grid3& g = f.grid();
  out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.nx() << ' ' << g.ny() << ' ' << g.nz() << '\n';
  out << std::setprecision(17);
  out << "ORIGIN " << g.origin()[0] << ' ' << g.origin()[1] << ' ' << g.origin()[2] << '\n';
  out << "SPACING " << g.h() << ' ' << g.h() << ' ' << g.h() << '\n';
  out << "POINT_DATA " << g.size() << '\n';
  out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (std::size_t n = 0; n < f.size(); ++n) out << f[n] << '\n';
}

void write_f64(const fs::path& path, std::span<const double> values) {
  auto out = open_out(path, std::ios::binary);
  append_f64(out, values);
}

void append_f64(std::ofstream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> read_f64(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % sizeof(double) != 0) throw InputError(path.string() + ": size is not a multiple of 8");
  std::vector<double> v(bytes / sizeof(double));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(bytes));
  return v;
}

void write_raw(const fs::path& stem, std::span<const ScalarField> comps) {
  if (comps.empty()) throw ConfigError("write_raw: no components");
  const Grid3& g = comps.front().grid();
  nlohmann::json j = grid_to_json(g);
  j["component_count"] = comps.size();
  j["dtype"] = "float64-le";
  write_json(with_ext(stem, ".json"), j);
  auto out = open_out(with_ext(stem, ".bin"), std::ios::binary);
  for (const auto& c : comps) {
    if (!(c.grid() == g)) throw ConfigError("write_raw: components on different grids");
    append_f64(out, c.values());
  }
}

void write_raw(const fs::path& stem, const ScalarField& f) {
  write_raw(stem, std::span<const ScalarField>(&f, 1));
}

std::vector<ScalarField> read_raw(const fs::path& stem) {
  const auto j = read_json(with_ext(stem, ".json"));
  const Grid3 g = grid_from_json(j);
  const auto count = j.at("component_count").get<std::size_t>();
  auto flat = read_f64(with_ext(stem, ".bin"));
  if (flat.size() != count * g.size()) throw InputError(stem.string() + ".bin: size mismatch");
  std::vector<ScalarField> out;
  for (std::size_t c = 0; c < count; ++c) {
    out.emplace_back(g, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(c * g.size()),
                                            flat.begin() + static_cast<std::ptrdiff_t>((c + 1) * g.size())));
  }
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << std::setw(2) << j << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_slice_csv(const fs::path& path, const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << std::setprecision(10);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_slice_pgm(const fs::path& path, const std::vector<std::vector<double>>& rows, double lo,
                     double hi) {
  auto out = open_out(path, std::ios::binary);
  const std::size_t h = rows.size(), w = rows.empty() ? 0 : rows.front().size();
  out << "P5\n" << w << ' ' << h << "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  // top row of the image is the last row of the slice (z increases upward)
  for (std::size_t r = h; r-- > 0;) {
    for (double v : rows[r]) {
      const double s = std::clamp((v - lo) / span, 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(s * 255.0))));
    }
  }
}

std::string file_hash(const fs::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

} // namespace cvxwave::io

#include "ugs/core/ply.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "ugs/core/error.hpp"
#include "ugs/core/mathutil.hpp"

namespace ugs {
namespace {

enum class PropType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

std::optional<PropType> parse_prop_type(const std::string& s) {
  static const std::map<std::string, PropType> types = {
      {"char", PropType::kInt8},     {"int8", PropType::kInt8},
      {"uchar", PropType::kUint8},   {"uint8", PropType::kUint8},
      {"short", PropType::kInt16},   {"int16", PropType::kInt16},
      {"ushort", PropType::kUint16}, {"uint16", PropType::kUint16},
      {"int", PropType::kInt32},     {"int32", PropType::kInt32},
      {"uint", PropType::kUint32},   {"uint32", PropType::kUint32},
      {"float", PropType::kFloat32}, {"float32", PropType::kFloat32},
      {"double", PropType::kFloat64}, {"float64", PropType::kFloat64}};
  const auto it = types.find(s);
  if (it == types.end()) return std::nullopt;
  return it->second;
}

std::size_t prop_size(PropType t) {
  switch (t) {
    case PropType::kInt8:
    case PropType::kUint8:
      return 1;
    case PropType::kInt16:
    case PropType::kUint16:
      return 2;
    case PropType::kInt32:
    case PropType::kUint32:
    case PropType::kFloat32:
      return 4;
    case PropType::kFloat64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  PropType type = PropType::kFloat32;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  bool has_list = false;
};

[[noreturn]] void parse_fail(int line_no, const std::string& line,
                             const std::string& why) {
  throw Error(ErrorCode::kParse, "PLY header line " + std::to_string(line_no) +
                                     " ('" + line + "'): " + why);
}

double binary_value(const unsigned char* p, PropType t) {
  switch (t) {
    case PropType::kInt8:
      return static_cast<double>(*reinterpret_cast<const std::int8_t*>(p));
    case PropType::kUint8:
      return static_cast<double>(*p);
    case PropType::kInt16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PropType::kUint16: {
      std::uint16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case PropType::kInt32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PropType::kUint32: {
      std::uint32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PropType::kFloat32: {
      float v;
      std::memcpy(&v, p, 4);
      return v;
    }
    case PropType::kFloat64: {
      double v;
      std::memcpy(&v, p, 8);
      return v;
    }
  }
  return 0.0;
}

// Colour properties may be stored as bytes (0..255) or floats (0..1).
double colour_value(double raw, PropType t) {
  if (t == PropType::kFloat32 || t == PropType::kFloat64) return clamp01(raw);
  return clamp01(raw / 255.0);
}

}  // namespace

PointCloud read_ply_points(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kIo, "cannot open PLY '" + path.string() + "'");

  std::string line;
  int line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line))
      throw Error(ErrorCode::kParse, "PLY '" + path.string() +
                                         "': unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return line;
  };

  next_line();
  if (line != "ply") parse_fail(line_no, line, "expected magic 'ply'");

  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;

  for (;;) {
    next_line();
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) {
      continue;
    } else if (keyword == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        binary = false;
      else if (fmt == "binary_little_endian")
        binary = true;
      else
        parse_fail(line_no, line, "unsupported format '" + fmt + "'");
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      if (!(ls >> e.name >> e.count))
        parse_fail(line_no, line, "expected 'element <name> <count>'");
      elements.push_back(e);
    } else if (keyword == "property") {
      if (elements.empty())
        parse_fail(line_no, line, "property before any element");
      std::string type_name;
      ls >> type_name;
      if (type_name == "list") {
        elements.back().has_list = true;
        continue;
      }
      Property p;
      const auto t = parse_prop_type(type_name);
      if (!t) parse_fail(line_no, line, "unknown type '" + type_name + "'");
      p.type = *t;
      if (!(ls >> p.name)) parse_fail(line_no, line, "missing property name");
      elements.back().properties.push_back(p);
    } else if (keyword == "end_header") {
      break;
    } else {
      parse_fail(line_no, line, "unknown keyword '" + keyword + "'");
    }
  }
  if (!have_format)
    throw Error(ErrorCode::kParse,
                "PLY '" + path.string() + "': missing format line");

  const auto vertex_it =
      std::find_if(elements.begin(), elements.end(),
                   [](const Element& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end())
    throw Error(ErrorCode::kParse,
                "PLY '" + path.string() + "': no 'vertex' element");
  const Element& vertex = *vertex_it;
  if (vertex.has_list)
    throw Error(ErrorCode::kParse,
                "PLY '" + path.string() + "': list properties on the vertex "
                                          "element are not supported");
  if (binary && vertex_it != elements.begin())
    throw Error(ErrorCode::kParse,
                "PLY '" + path.string() +
                    "': binary files must store the vertex element first");

  auto find_prop = [&](const char* name) -> int {
    for (std::size_t i = 0; i < vertex.properties.size(); ++i)
      if (vertex.properties[i].name == name) return static_cast<int>(i);
    return -1;
  };
  const int ix = find_prop("x"), iy = find_prop("y"), iz = find_prop("z");
  if (ix < 0 || iy < 0 || iz < 0)
    throw Error(ErrorCode::kParse, "PLY '" + path.string() +
                                       "': vertex element lacks x/y/z");
  int ir = find_prop("red"), ig = find_prop("green"), ib = find_prop("blue");
  if (ir < 0) ir = find_prop("r");
  if (ig < 0) ig = find_prop("g");
  if (ib < 0) ib = find_prop("b");
  const bool has_rgb = ir >= 0 && ig >= 0 && ib >= 0;

  if (vertex.count == 0)
    throw Error(ErrorCode::kEmptyScene,
                "PLY '" + path.string() + "' contains zero points");

  PointCloud cloud;
  cloud.points.reserve(vertex.count);
  if (has_rgb) cloud.colours.reserve(vertex.count);

  const std::size_t n_props = vertex.properties.size();
  std::vector<double> row(n_props);

  if (!binary) {
    // ASCII: elements appear in declaration order; skip rows until vertex.
    for (auto it = elements.begin(); it != vertex_it; ++it)
      for (std::size_t i = 0; i < it->count; ++i) next_line();
    for (std::size_t i = 0; i < vertex.count; ++i) {
      next_line();
      std::istringstream ls(line);
      for (std::size_t p = 0; p < n_props; ++p) {
        if (!(ls >> row[p]))
          throw Error(ErrorCode::kParse,
                      "PLY '" + path.string() + "' line " +
                          std::to_string(line_no) + ": expected " +
                          std::to_string(n_props) + " values");
      }
      cloud.points.emplace_back(row[ix], row[iy], row[iz]);
      if (has_rgb)
        cloud.colours.emplace_back(
            colour_value(row[ir], vertex.properties[ir].type),
            colour_value(row[ig], vertex.properties[ig].type),
            colour_value(row[ib], vertex.properties[ib].type));
    }
  } else {
    std::size_t stride = 0;
    std::vector<std::size_t> offsets(n_props);
    for (std::size_t p = 0; p < n_props; ++p) {
      offsets[p] = stride;
      stride += prop_size(vertex.properties[p].type);
    }
    std::vector<unsigned char> buf(stride);
    for (std::size_t i = 0; i < vertex.count; ++i) {
      in.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(stride));
      if (!in)
        throw Error(ErrorCode::kParse,
                    "PLY '" + path.string() + "': truncated vertex data");
      for (std::size_t p = 0; p < n_props; ++p)
        row[p] = binary_value(buf.data() + offsets[p], vertex.properties[p].type);
      cloud.points.emplace_back(row[ix], row[iy], row[iz]);
      if (has_rgb)
        cloud.colours.emplace_back(
            colour_value(row[ir], vertex.properties[ir].type),
            colour_value(row[ig], vertex.properties[ig].type),
            colour_value(row[ib], vertex.properties[ib].type));
    }
  }
  return cloud;
}

void write_ply_points(const std::filesystem::path& path,
                      const std::vector<Eigen::Vector3d>& points,
                      const std::vector<Eigen::Vector3d>& colours,
                      PlyFormat format) {
  if (!colours.empty() && colours.size() != points.size())
    throw Error(ErrorCode::kDimension, "colour count must match point count");
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for write");

  out << "ply\n";
  out << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                      : "format binary_little_endian 1.0\n");
  out << "element vertex " << points.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (!colours.empty())
    out << "property double red\nproperty double green\nproperty double blue\n";
  out << "end_header\n";

  if (format == PlyFormat::kAscii) {
    char buf[80];
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (int k = 0; k < 3; ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", points[i][k]);
        out << buf << (k == 2 && colours.empty() ? "" : " ");
      }
      if (!colours.empty()) {
        for (int k = 0; k < 3; ++k) {
          std::snprintf(buf, sizeof(buf), "%.17g", colours[i][k]);
          out << buf << (k == 2 ? "" : " ");
        }
      }
      out << "\n";
    }
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) {
      out.write(reinterpret_cast<const char*>(points[i].data()),
                3 * sizeof(double));
      if (!colours.empty())
        out.write(reinterpret_cast<const char*>(colours[i].data()),
                  3 * sizeof(double));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<double> mean_knn_distances(const std::vector<Eigen::Vector3d>& pts,
                                       int k) {
  const std::size_t n = pts.size();
  std::vector<double> result(n, 0.1);
  if (n < 2) return result;
  const int neighbours = std::min<int>(k, static_cast<int>(n) - 1);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d2[j] = (pts[j] - pts[i]).squaredNorm();
    d2[i] = std::numeric_limits<double>::infinity();
    std::nth_element(d2.begin(), d2.begin() + (neighbours - 1), d2.end());
    double sum = 0.0;
    for (int m = 0; m < neighbours; ++m) sum += std::sqrt(d2[m]);
    result[i] = sum / neighbours;
  }
  return result;
}

GaussianSet gaussians_from_points(const PointCloud& cloud,
                                  const Eigen::Vector3d& colour_default,
                                  int sh_degree) {
  const std::size_t n = cloud.points.size();
  if (n == 0)
    throw Error(ErrorCode::kEmptyScene, "point cloud contains zero points");

  GaussianSet set;
  set.sh_degree = sh_degree;
  set.resize(n);

  const std::vector<double> knn = mean_knn_distances(cloud.points);
  const double opacity_logit = logit(0.1);
  const int cdim = set.colour_dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) set.positions[3 * i + k] = cloud.points[i][k];
    const double log_scale = std::log(std::max(knn[i], 1e-9));
    for (int k = 0; k < 3; ++k) set.log_scales[3 * i + k] = log_scale;
    set.opacity_logits[i] = opacity_logit;
    const Eigen::Vector3d rgb =
        cloud.has_colours() ? cloud.colours[i] : colour_default;
    for (int k = 0; k < 3; ++k)
      set.colours[static_cast<std::size_t>(cdim) * i + k] = rgb[k];
  }
  set.validate();
  return set;
}

GaussianSet ingest_point_cloud(const std::filesystem::path& path,
                               const Eigen::Vector3d& colour_default,
                               int sh_degree) {
  return gaussians_from_points(read_ply_points(path), colour_default,
                               sh_degree);
}

}  // namespace ugs

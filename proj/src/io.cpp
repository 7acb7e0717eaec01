#include "rawdepth/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rawdepth {

using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed " + path.string());
}

// -- Calibration ------------------------------------------------------------------------

namespace {

struct ModelKeys {
  std::vector<std::string> required;
  bool fisheye;
};

const std::map<std::string, ModelKeys>& model_keys() {
  static const std::map<std::string, ModelKeys> keys{
      {"brown_conrady", {{"fx", "fy", "cx", "cy", "k1", "k2", "k3", "p1", "p2"}, false}},
      {"polynomial", {{"a1", "a2", "a3", "a4", "cx", "cy"}, true}},
      {"ucm", {{"f", "xi", "cx", "cy"}, true}},
      {"eucm", {{"f", "alpha", "beta", "cx", "cy"}, true}},
      {"rectilinear", {{"f", "cx", "cy"}, true}},
      {"stereographic", {{"f", "cx", "cy"}, true}},
      {"double_sphere", {{"f", "xi", "alpha", "cx", "cy"}, true}},
  };
  return keys;
}

double number(const ordered_json& doc, const std::string& key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw Error(ErrorCode::InvalidParameter, key);
  if (!it->is_number()) throw Error(ErrorCode::InvalidParameter, key);
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameter, key);
  return v;
}

int integer(const ordered_json& doc, const std::string& key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_integer()) throw Error(ErrorCode::InvalidParameter, key);
  const auto v = it->get<long long>();
  if (v < 1 || v > (1 << 20)) throw Error(ErrorCode::InvalidParameter, key);
  return static_cast<int>(v);
}

ordered_json parse_json(std::string_view text) {
  try {
    return ordered_json::parse(text.begin(), text.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

}  // namespace

CameraModel parse_calibration(std::string_view text) {
  const ordered_json doc = parse_json(text);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "byte 0: calibration must be a JSON object");
  const auto mit = doc.find("model");
  if (mit == doc.end() || !mit->is_string()) throw Error(ErrorCode::InvalidParameter, "model");
  const std::string model = mit->get<std::string>();
  const auto kit = model_keys().find(model);
  if (kit == model_keys().end()) throw Error(ErrorCode::UnknownModel, model);
  const ModelKeys& keys = kit->second;

  std::set<std::string> allowed{"model", "width", "height", "distance_kind"};
  allowed.insert(keys.required.begin(), keys.required.end());
  if (keys.fisheye) allowed.insert("theta_max");
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) throw Error(ErrorCode::InvalidParameter, key);
  }
  const int width = integer(doc, "width");
  const int height = integer(doc, "height");
  std::map<std::string, double> p;
  for (const auto& k : keys.required) p[k] = number(doc, k);

  DistanceKind kind = keys.fisheye ? DistanceKind::EuclideanDistance : DistanceKind::PlanarDepth;
  if (const auto dk = doc.find("distance_kind"); dk != doc.end()) {
    const std::string s = dk->is_string() ? dk->get<std::string>() : "";
    if (s == "depth") {
      kind = DistanceKind::PlanarDepth;
    } else if (s == "distance") {
      kind = DistanceKind::EuclideanDistance;
    } else {
      throw Error(ErrorCode::InvalidParameter, "distance_kind");
    }
  }

  if (!keys.fisheye) {
    BrownConradyParams bc;
    bc.k1 = p["k1"];
    bc.k2 = p["k2"];
    bc.k3 = p["k3"];
    bc.p1 = p["p1"];
    bc.p2 = p["p2"];
    bc.intrinsics = {p["fx"], p["fy"], p["cx"], p["cy"], width, height};
    return CameraModel(bc, kind);
  }
  const double theta_max = doc.contains("theta_max") ? number(doc, "theta_max") : 0.0;
  if (doc.contains("theta_max") && !(theta_max > 0.0)) throw Error(ErrorCode::InvalidParameter, "theta_max");
  RadialKind radial;
  if (model == "polynomial") {
    radial = PolynomialRadial{{p["a1"], p["a2"], p["a3"], p["a4"]}};
  } else if (model == "ucm") {
    radial = UcmRadial{p["f"], p["xi"]};
  } else if (model == "eucm") {
    radial = EucmRadial{p["f"], p["alpha"], p["beta"]};
  } else if (model == "rectilinear") {
    radial = RectilinearRadial{p["f"]};
  } else if (model == "stereographic") {
    radial = StereographicRadial{p["f"]};
  } else {
    radial = DoubleSphereRadial{p["f"], p["xi"], p["alpha"]};
  }
  try {
    return CameraModel(FisheyeModel(radial, p["cx"], p["cy"], width, height, theta_max), kind);
  } catch (const Error& e) {
    // A non-monotone radial function is a calibration fault of the
    // leading coefficient set.
    if (e.code() == ErrorCode::NonMonotoneRadial) {
      throw Error(ErrorCode::InvalidParameter, keys.required.front());
    }
    throw;
  }
}

CameraModel load_calibration(const std::filesystem::path& path) { return parse_calibration(read_text_file(path)); }

std::string serialize_calibration(const CameraModel& cam) {
  ordered_json doc;
  doc["model"] = cam.model_name();
  doc["width"] = cam.width();
  doc["height"] = cam.height();
  doc["distance_kind"] = cam.distance_kind() == DistanceKind::PlanarDepth ? "depth" : "distance";
  if (const auto* bc = cam.brown_conrady()) {
    doc["fx"] = bc->intrinsics.fx;
    doc["fy"] = bc->intrinsics.fy;
    doc["cx"] = bc->intrinsics.cx;
    doc["cy"] = bc->intrinsics.cy;
    doc["k1"] = bc->k1;
    doc["k2"] = bc->k2;
    doc["k3"] = bc->k3;
    doc["p1"] = bc->p1;
    doc["p2"] = bc->p2;
  } else {
    const FisheyeModel& fm = *cam.fisheye();
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PolynomialRadial>) {
            doc["a1"] = m.a[0];
            doc["a2"] = m.a[1];
            doc["a3"] = m.a[2];
            doc["a4"] = m.a[3];
          } else {
            doc["f"] = m.f;
            if constexpr (std::is_same_v<T, UcmRadial>) doc["xi"] = m.xi;
            if constexpr (std::is_same_v<T, EucmRadial>) {
              doc["alpha"] = m.alpha;
              doc["beta"] = m.beta;
            }
            if constexpr (std::is_same_v<T, DoubleSphereRadial>) {
              doc["xi"] = m.xi;
              doc["alpha"] = m.alpha;
            }
          }
        },
        fm.kind());
    doc["cx"] = fm.cx();
    doc["cy"] = fm.cy();
    doc["theta_max"] = fm.theta_max();
  }
  return doc.dump(2) + "\n";
}

// -- PFM ----------------------------------------------------------------------------------

std::string encode_pfm(const Grid<double>& grid) {
  const int c = grid.channels();
  if (c != 1 && c != 3) throw Error(ErrorCode::InvalidParameter, "pfm channels");
  std::string out = (c == 1 ? "Pf\n" : "PF\n") + std::to_string(grid.width()) + " " +
                    std::to_string(grid.height()) + "\n-1\n";
  const size_t header = out.size();
  out.resize(header + grid.size() * 4);
  char* dst = out.data() + header;
  for (int y = grid.height() - 1; y >= 0; --y) {
    for (int x = 0; x < grid.width(); ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(grid(x, y, ch)));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        std::memcpy(dst, &bits, 4);
        dst += 4;
      }
    }
  }
  return out;
}

Grid<double> decode_pfm(std::string_view bytes) {
  size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  const std::string magic = token();
  if (magic != "Pf" && magic != "PF") throw Error(ErrorCode::ParseError, "byte 0: not a PFM file");
  const int c = magic == "Pf" ? 1 : 3;
  int w = 0, h = 0;
  double scale = 0.0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    scale = std::stod(token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "byte " + std::to_string(pos) + ": bad PFM header");
  }
  ++pos;  // single whitespace after the scale
  if (w < 1 || h < 1 || scale == 0.0) throw Error(ErrorCode::ParseError, "byte " + std::to_string(pos) + ": PFM header");
  const size_t need = static_cast<size_t>(w) * h * c * 4;
  if (bytes.size() < pos + need) throw Error(ErrorCode::ParseError, "byte " + std::to_string(bytes.size()) + ": truncated PFM");
  const bool little = scale < 0.0;
  const bool swap = little != (std::endian::native == std::endian::little);
  Grid<double> grid(w, h, c, 0.0);
  const char* src = bytes.data() + pos;
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        std::uint32_t bits;
        std::memcpy(&bits, src, 4);
        src += 4;
        if (swap) bits = __builtin_bswap32(bits);
        grid(x, y, ch) = std::bit_cast<float>(bits);
      }
    }
  }
  return grid;
}

void write_pfm(const std::filesystem::path& path, const Grid<double>& grid) { write_text_file(path, encode_pfm(grid)); }
Grid<double> read_pfm(const std::filesystem::path& path) { return decode_pfm(read_text_file(path)); }

void write_coordinate_map(const std::filesystem::path& path, const CoordinateMap& map) {
  Grid<double> g(map.width(), map.height(), 3, 0.0);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      g(x, y, 0) = map.coords(x, y).x();
      g(x, y, 1) = map.coords(x, y).y();
      g(x, y, 2) = map.valid(x, y);
    }
  }
  write_pfm(path, g);
}

CoordinateMap read_coordinate_map(const std::filesystem::path& path) {
  const Grid<double> g = read_pfm(path);
  if (g.channels() != 3) throw Error(ErrorCode::ParseError, "byte 0: remap grid needs 3 channels");
  CoordinateMap map(g.width(), g.height());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      map.coords(x, y) = {g(x, y, 0), g(x, y, 1)};
      map.valid(x, y) = g(x, y, 2) > 0.5 ? 1 : 0;
    }
  }
  return map;
}

DepthMap read_depth(const std::filesystem::path& path, DistanceKind kind) {
  Grid<double> g = read_pfm(path);
  if (g.channels() != 1) throw Error(ErrorCode::ParseError, "byte 0: depth PFM must have one channel");
  return DepthMap(std::move(g), kind);
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth) { write_pfm(path, depth.values); }

// -- PNG ------------------------------------------------------------------------------------

namespace {

struct PngRaw {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

PngRaw read_png_raw(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    std::fclose(fp);
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng init");
  }
  PngRaw raw;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error(ErrorCode::ParseError, "byte 0: invalid PNG " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  const size_t n = static_cast<size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(n);
  for (int y = 0; y < raw.height; ++y) {
    const png_byte* r = rows[y];
    for (int i = 0; i < raw.width * raw.channels; ++i) {
      raw.samples[static_cast<size_t>(y) * raw.width * raw.channels + i] =
          raw.bit_depth == 16 ? static_cast<std::uint16_t>((r[2 * i] << 8) | r[2 * i + 1]) : r[i];
    }
  }
  return raw;
}

void write_png_raw(const std::filesystem::path& path, int w, int h, int channels, int bit_depth,
                   const std::vector<std::uint16_t>& samples) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    std::fclose(fp);
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng init");
  }
  const size_t bps = bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> buffer(static_cast<size_t>(w) * h * channels * bps);
  for (size_t i = 0; i < samples.size(); ++i) {
    if (bps == 2) {
      buffer[2 * i] = static_cast<png_byte>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<png_byte>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + static_cast<size_t>(y) * w * channels * bps;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(ErrorCode::IoError, "PNG write failed " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, bit_depth, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  const PngRaw raw = read_png_raw(path);
  if (raw.channels != 1 && raw.channels != 3) throw Error(ErrorCode::ParseError, "byte 0: unsupported PNG layout");
  const double maxv = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ImageBuffer img(raw.width, raw.height, raw.channels, 0.0);
  for (size_t i = 0; i < img.size(); ++i) img[i] = raw.samples[i] / maxv;
  return img;
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(ErrorCode::InvalidParameter, "bit_depth");
  if (image.channels() != 1 && image.channels() != 3) throw Error(ErrorCode::InvalidParameter, "channels");
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint16_t> samples(image.size());
  for (size_t i = 0; i < image.size(); ++i) {
    const double v = std::isfinite(image[i]) ? std::clamp(image[i], 0.0, 1.0) : 0.0;
    samples[i] = static_cast<std::uint16_t>(std::lround(v * maxv));
  }
  write_png_raw(path, image.width(), image.height(), image.channels(), bit_depth, samples);
}

void write_depth_png16(const std::filesystem::path& path, const DepthMap& depth, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "scale");
  std::vector<std::uint16_t> samples(depth.values.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const double d = depth.values[i];
    const double v = std::isfinite(d) && d > 0.0 ? std::round(d * scale) : 0.0;
    samples[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
  }
  write_png_raw(path, depth.width(), depth.height(), 1, 16, samples);
}

DepthMap read_depth_png16(const std::filesystem::path& path, DistanceKind kind, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidParameter, "scale");
  const PngRaw raw = read_png_raw(path);
  if (raw.channels != 1 || raw.bit_depth != 16) throw Error(ErrorCode::ParseError, "byte 0: expected 16-bit gray PNG");
  DepthMap d(raw.width, raw.height, 0.0, kind);
  for (size_t i = 0; i < raw.samples.size(); ++i) d.values[i] = raw.samples[i] / scale;
  return d;
}

ImageBuffer read_image(const std::filesystem::path& path) {
  return path.extension() == ".pfm" ? read_pfm(path) : read_png(path);
}

void write_image(const std::filesystem::path& path, const ImageBuffer& image) {
  if (path.extension() == ".pfm") {
    write_pfm(path, image);
  } else {
    write_png(path, image, 16);
  }
}

// -- CSV -------------------------------------------------------------------------------------

std::vector<std::vector<double>> parse_csv_numbers(std::string_view text) {
  std::vector<std::vector<double>> rows;
  size_t line_start = 0;
  bool first = true;
  while (line_start < text.size()) {
    size_t end = text.find('\n', line_start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(line_start, end - line_start));
    const size_t offset = line_start;
    line_start = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<double> row;
    bool numeric = true;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* endp = nullptr;
      const double v = std::strtod(cell.c_str(), &endp);
      if (endp == cell.c_str() || std::string(endp).find_first_not_of(" \t") != std::string::npos) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::ParseError, "byte " + std::to_string(offset) + ": non-numeric CSV row");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<OdometrySample> parse_odometry_csv(std::string_view text) {
  std::vector<OdometrySample> out;
  for (const auto& row : parse_csv_numbers(text)) {
    if (row.size() != 2) throw Error(ErrorCode::ParseError, "odometry rows need timestamp_s,speed_mps");
    if (row[1] < 0.0) throw Error(ErrorCode::InvalidParameter, "speed_mps");
    if (!out.empty() && !(row[0] > out.back().timestamp_s)) {
      throw Error(ErrorCode::NonMonotonicTime, "timestamp " + format_double(row[0]));
    }
    out.push_back({row[1], row[0]});
  }
  return out;
}

Se3Transform parse_pose(std::string_view csv_values) {
  const auto rows = parse_csv_numbers(csv_values);
  if (rows.size() != 1 || rows[0].size() != 6) throw Error(ErrorCode::ParseError, "pose needs 6 comma-separated values");
  Vector6d v;
  for (int i = 0; i < 6; ++i) v[i] = rows[0][i];
  return Se3Transform::from_vector(v);
}

std::vector<Se3Transform> parse_poses_csv(std::string_view text) {
  std::vector<Se3Transform> out;
  for (const auto& row : parse_csv_numbers(text)) {
    if (row.size() != 6) throw Error(ErrorCode::ParseError, "pose rows need 6 values");
    Vector6d v;
    for (int i = 0; i < 6; ++i) v[i] = row[i];
    out.push_back(Se3Transform::from_vector(v));
  }
  return out;
}

std::string format_pose(const Se3Transform& T) {
  const Vector6d v = T.to_vector();
  std::string out;
  for (int i = 0; i < 6; ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

// -- Scenes -----------------------------------------------------------------------------------

namespace {

Eigen::Vector3d vec3(const ordered_json& j, const std::string& key, const Eigen::Vector3d& fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array() || it->size() != 3) throw Error(ErrorCode::InvalidParameter, key);
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!(*it)[i].is_number()) throw Error(ErrorCode::InvalidParameter, key);
    v[i] = (*it)[i].get<double>();
  }
  return v;
}

double num_or(const ordered_json& j, const std::string& key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number()) throw Error(ErrorCode::InvalidParameter, key);
  return it->get<double>();
}

const char* texture_name(Texture::Kind k) {
  switch (k) {
    case Texture::Kind::Checker: return "checker";
    case Texture::Kind::Noise: return "noise";
    case Texture::Kind::Sinusoid: return "sinusoid";
  }
  return "noise";
}

}  // namespace

SyntheticScene parse_scene(std::string_view text) {
  const ordered_json doc = parse_json(text);
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "byte 0: scene must be a JSON object");
  SyntheticScene scene;
  scene.background = num_or(doc, "background", 0.0);
  scene.channels = static_cast<int>(num_or(doc, "channels", 1));
  const auto prims = doc.find("primitives");
  if (prims == doc.end() || !prims->is_array()) throw Error(ErrorCode::InvalidParameter, "primitives");
  for (const auto& pj : *prims) {
    Primitive p;
    const std::string type = pj.value("type", std::string("plane"));
    if (type == "plane") {
      p.kind = Primitive::Kind::Plane;
    } else if (type == "sphere") {
      p.kind = Primitive::Kind::Sphere;
    } else {
      throw Error(ErrorCode::InvalidParameter, "type");
    }
    p.pose.rotation = vec3(pj, "rotation", Eigen::Vector3d::Zero());
    p.pose.translation = vec3(pj, "translation", Eigen::Vector3d::Zero());
    if (const auto s = pj.find("size"); s != pj.end()) {
      if (!s->is_array() || s->size() != 2) throw Error(ErrorCode::InvalidParameter, "size");
      p.size = {(*s)[0].get<double>(), (*s)[1].get<double>()};
    }
    p.radius = num_or(pj, "radius", 1.0);
    if (const auto t = pj.find("texture"); t != pj.end()) {
      const std::string kind = t->value("kind", std::string("noise"));
      if (kind == "checker") {
        p.texture.kind = Texture::Kind::Checker;
      } else if (kind == "noise") {
        p.texture.kind = Texture::Kind::Noise;
      } else if (kind == "sinusoid") {
        p.texture.kind = Texture::Kind::Sinusoid;
      } else {
        throw Error(ErrorCode::InvalidParameter, "kind");
      }
      p.texture.period = num_or(*t, "period", p.texture.period);
      p.texture.low = num_or(*t, "low", p.texture.low);
      p.texture.high = num_or(*t, "high", p.texture.high);
      p.texture.seed = static_cast<std::uint64_t>(num_or(*t, "seed", 1));
    }
    scene.primitives.push_back(p);
  }
  scene.validate();
  return scene;
}

std::string serialize_scene(const SyntheticScene& scene) {
  ordered_json doc;
  doc["background"] = scene.background;
  doc["channels"] = scene.channels;
  doc["primitives"] = ordered_json::array();
  for (const auto& p : scene.primitives) {
    ordered_json pj;
    pj["type"] = p.kind == Primitive::Kind::Plane ? "plane" : "sphere";
    pj["rotation"] = {p.pose.rotation.x(), p.pose.rotation.y(), p.pose.rotation.z()};
    pj["translation"] = {p.pose.translation.x(), p.pose.translation.y(), p.pose.translation.z()};
    if (p.kind == Primitive::Kind::Plane) {
      pj["size"] = {p.size.x(), p.size.y()};
    } else {
      pj["radius"] = p.radius;
    }
    pj["texture"] = {{"kind", texture_name(p.texture.kind)},
                     {"period", p.texture.period},
                     {"low", p.texture.low},
                     {"high", p.texture.high},
                     {"seed", p.texture.seed}};
    doc["primitives"].push_back(pj);
  }
  return doc.dump(2) + "\n";
}

}  // namespace rawdepth

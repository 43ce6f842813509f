#include "udgs/dataio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace udgs {

namespace {

struct IndexEntry {
  double timestamp;
  std::string path;
};

std::vector<IndexEntry> parse_index_file(const std::string& path) {
  std::ifstream is(path);
  if (!is)
    throw Error(ErrorCode::Data, "MissingIndexFile: " + path);
  std::vector<IndexEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    IndexEntry e;
    if (!(ls >> e.timestamp >> e.path))
      throw Error(ErrorCode::Data, "MalformedLine: " + path + ":" +
                                       std::to_string(line_no) + ": '" + line + "'");
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(),
            [](const IndexEntry& a, const IndexEntry& b) {
              return a.timestamp < b.timestamp;
            });
  return entries;
}

// Greedy globally-nearest association, the TUM tooling convention. Symmetric
// in its two arguments by construction.
std::vector<std::pair<size_t, size_t>> associate(
    const std::vector<IndexEntry>& a, const std::vector<IndexEntry>& b,
    double max_dt) {
  struct Cand {
    double dt;
    size_t i, j;
  };
  std::vector<Cand> cands;
  size_t lo = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    while (lo < b.size() && b[lo].timestamp < a[i].timestamp - max_dt) ++lo;
    for (size_t j = lo; j < b.size() && b[j].timestamp <= a[i].timestamp + max_dt;
         ++j)
      cands.push_back({std::abs(a[i].timestamp - b[j].timestamp), i, j});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.dt != y.dt) return x.dt < y.dt;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<uint8_t> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<std::pair<size_t, size_t>> pairs;
  for (const Cand& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    pairs.emplace_back(c.i, c.j);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

CameraIntrinsics parse_intrinsics_file(const std::string& path) {
  std::ifstream is(path);
  if (!is)
    throw Error(ErrorCode::Data, "MissingIndexFile: " + path +
                                     " (expected 'fx fy cx cy width height')");
  std::string line;
  while (std::getline(is, line)) {
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    CameraIntrinsics k;
    if (!(ls >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height))
      throw Error(ErrorCode::Data, "MalformedLine: " + path + ": '" + line + "'");
    k.validate();
    return k;
  }
  throw Error(ErrorCode::Data, "MalformedLine: " + path + " has no data line");
}

}  // namespace

SequenceSource load_tum_sequence(const std::string& root_dir, double max_dt) {
  namespace fs = std::filesystem;
  SequenceSource seq;
  seq.root = root_dir;

  const auto rgb = parse_index_file((fs::path(root_dir) / "rgb.txt").string());
  const auto depth = parse_index_file((fs::path(root_dir) / "depth.txt").string());
  const auto pairs = associate(rgb, depth, max_dt);
  if (pairs.empty())
    throw Error(ErrorCode::Data, "EmptyAssociation: no rgb/depth pairs within " +
                                     std::to_string(max_dt) + " s");
  for (const auto& [i, j] : pairs) {
    FramePair f;
    f.t_rgb = rgb[i].timestamp;
    f.rgb_path = (fs::path(root_dir) / rgb[i].path).string();
    f.t_depth = depth[j].timestamp;
    f.depth_path = (fs::path(root_dir) / depth[j].path).string();
    seq.frames.push_back(std::move(f));
  }
  seq.dropped_rgb = rgb.size() - pairs.size();

  const auto gt_path = fs::path(root_dir) / "groundtruth.txt";
  if (fs::exists(gt_path)) {
    std::ifstream is(gt_path);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      std::istringstream ls(line);
      GroundTruthRecord r;
      if (!(ls >> r.timestamp >> r.translation.x() >> r.translation.y() >>
            r.translation.z() >> r.quaternion[0] >> r.quaternion[1] >>
            r.quaternion[2] >> r.quaternion[3]))
        throw Error(ErrorCode::Data, "MalformedLine: " + gt_path.string() + ":" +
                                         std::to_string(line_no));
      seq.groundtruth.push_back(r);
    }
    std::sort(seq.groundtruth.begin(), seq.groundtruth.end(),
              [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }

  seq.intrinsics =
      parse_intrinsics_file((fs::path(root_dir) / "intrinsics.txt").string());
  return seq;
}

namespace {

constexpr char kDepthMagic[8] = {'U', 'D', 'G', 'S', 'D', 'E', 'P', '1'};

struct PngReadCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

void open_png_reader(PngReadCtx& ctx, const std::string& path) {
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(ErrorCode::Data, "BadMagic: not a PNG file: " + path);
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw Error(ErrorCode::Internal, "libpng initialization failed");
  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
}

}  // namespace

Image load_image_rgb(const std::string& path) {
  PngReadCtx ctx;
  open_png_reader(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error(ErrorCode::Data, "UnreadableFile: PNG decode error in " + path);

  png_read_info(ctx.png, ctx.info);
  png_set_strip_16(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_set_palette_to_rgb(ctx.png);
  png_set_expand_gray_1_2_4_to_8(ctx.png);
  png_set_gray_to_rgb(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  std::vector<png_byte> row(static_cast<size_t>(w) * 3);
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = row[static_cast<size_t>(x) * 3 + c] / 255.0;
  }
  return img;
}

void write_image_png(const Image& image, const std::string& path) {
  PngWriteCtx ctx;
  ctx.fp = std::fopen(path.c_str(), "wb");
  if (!ctx.fp) throw Error(ErrorCode::Io, "IoFailure: cannot open " + path);
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info)
    throw Error(ErrorCode::Internal, "libpng initialization failed");
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error(ErrorCode::Io, "IoFailure: PNG encode error for " + path);

  const int h = image.height(), w = image.width();
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_byte> row(static_cast<size_t>(w) * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = image.channels() == 3 ? image.at(y, x, c) : image.at(y, x);
        row[static_cast<size_t>(x) * 3 + c] =
            static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
}

namespace {

DepthMap load_depth_png16(const std::string& path, double units_scale) {
  PngReadCtx ctx;
  open_png_reader(ctx, path);
  if (setjmp(png_jmpbuf(ctx.png)))
    throw Error(ErrorCode::Data, "UnreadableFile: PNG decode error in " + path);

  png_read_info(ctx.png, ctx.info);
  const int depth_bits = png_get_bit_depth(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  if (depth_bits != 16 || color != PNG_COLOR_TYPE_GRAY)
    throw Error(ErrorCode::Data,
                "SizeMismatch: " + path + " is not 16-bit single-channel");
  png_read_update_info(ctx.png, ctx.info);

  const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  DepthMap d(h, w);
  d.units_scale = static_cast<float>(units_scale);
  std::vector<png_byte> row(static_cast<size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      // PNG 16-bit samples are big-endian.
      const unsigned raw = (static_cast<unsigned>(row[2 * x]) << 8) |
                           static_cast<unsigned>(row[2 * x + 1]);
      const float v = static_cast<float>(raw * units_scale);
      d.set(y, x, v, raw > 0);
    }
  }
  return d;
}

DepthMap load_depth_rawf32(const std::string& path, double units_scale) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kDepthMagic, 8) != 0)
    throw Error(ErrorCode::Data, "BadMagic: not a UDGSDEP1 file: " + path);
  std::uint32_t w = 0, h = 0;
  is.read(reinterpret_cast<char*>(&w), 4);
  is.read(reinterpret_cast<char*>(&h), 4);
  if (!is) throw Error(ErrorCode::Data, "SizeMismatch: truncated header: " + path);
  DepthMap d(static_cast<int>(h), static_cast<int>(w));
  d.units_scale = static_cast<float>(units_scale);
  is.read(reinterpret_cast<char*>(d.values.data()),
          static_cast<std::streamsize>(d.values.size() * sizeof(float)));
  if (is.gcount() !=
      static_cast<std::streamsize>(d.values.size() * sizeof(float)))
    throw Error(ErrorCode::Data, "SizeMismatch: truncated payload: " + path);
  for (size_t i = 0; i < d.values.size(); ++i) {
    float v = d.values[i];
    const bool ok = std::isfinite(v) && v > 0.0f;
    if (units_scale != 1.0) v = static_cast<float>(v * units_scale);
    d.values[i] = ok ? v : 0.0f;
    d.valid[i] = ok ? 1 : 0;
  }
  return d;
}

}  // namespace

DepthMap load_depth(const std::string& path, DepthFormat format,
                    double units_scale) {
  return format == DepthFormat::Png16 ? load_depth_png16(path, units_scale)
                                      : load_depth_rawf32(path, units_scale);
}

DepthMap load_depth_auto(const std::string& path, double units_scale) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".png") return load_depth_png16(path, units_scale);
  return load_depth_rawf32(path, 1.0);  // rawf32 is already metric
}

void write_depth_rawf32(const DepthMap& depth, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "IoFailure: cannot open " + path);
  os.write(kDepthMagic, 8);
  const std::uint32_t w = static_cast<std::uint32_t>(depth.width);
  const std::uint32_t h = static_cast<std::uint32_t>(depth.height);
  os.write(reinterpret_cast<const char*>(&w), 4);
  os.write(reinterpret_cast<const char*>(&h), 4);
  // Invalid pixels are stored as 0 so the mask round-trips.
  std::vector<float> vals = depth.values;
  for (size_t i = 0; i < vals.size(); ++i)
    if (!depth.valid[i]) vals[i] = 0.0f;
  os.write(reinterpret_cast<const char*>(vals.data()),
           static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (!os) throw Error(ErrorCode::Io, "IoFailure: short write to " + path);
}

void Trajectory::validate() const {
  for (size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && !(records[i].timestamp > records[i - 1].timestamp))
      throw Error(ErrorCode::Data, "Trajectory: timestamps not strictly increasing");
    if (std::abs(records[i].quaternion.norm() - 1.0) > 1e-6)
      throw Error(ErrorCode::Data, "Trajectory: quaternion not unit norm");
  }
}

void write_trajectory_tum(const Trajectory& traj, const std::string& path) {
  traj.validate();
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "IoFailure: cannot open " + path);
  char buf[256];
  for (const TrajectoryRecord& r : traj.records) {
    std::snprintf(buf, sizeof(buf), "%.6f %.6f %.6f %.6f %.6f %.6f %.6f %.6f\n",
                  r.timestamp, r.translation.x(), r.translation.y(),
                  r.translation.z(), r.quaternion[0], r.quaternion[1],
                  r.quaternion[2], r.quaternion[3]);
    os << buf;
  }
  if (!os) throw Error(ErrorCode::Io, "IoFailure: short write to " + path);
}

Trajectory load_trajectory_tum(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Data, "MissingIndexFile: " + path);
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    TrajectoryRecord r;
    if (!(ls >> r.timestamp >> r.translation.x() >> r.translation.y() >>
          r.translation.z() >> r.quaternion[0] >> r.quaternion[1] >>
          r.quaternion[2] >> r.quaternion[3]))
      throw Error(ErrorCode::Data, "MalformedLine: " + path + ":" +
                                       std::to_string(line_no) + ": '" + line + "'");
    const double n = r.quaternion.norm();
    if (n > 0) r.quaternion /= n;
    traj.records.push_back(r);
  }
  return traj;
}

TrajectoryRecord trajectory_record_from_tcw(double timestamp,
                                            const SE3Pose& t_cw) {
  const SE3Pose t_wc = t_cw.inverse();
  const Vec4 q_wxyz = rotation_to_quat(t_wc.rotation);
  TrajectoryRecord r;
  r.timestamp = timestamp;
  r.translation = t_wc.translation;
  r.quaternion = Vec4(q_wxyz[1], q_wxyz[2], q_wxyz[3], q_wxyz[0]);
  return r;
}

SE3Pose tcw_from_trajectory_record(const TrajectoryRecord& rec) {
  SE3Pose t_wc;
  t_wc.rotation = quat_to_rotation(
      Vec4(rec.quaternion[3], rec.quaternion[0], rec.quaternion[1],
           rec.quaternion[2]).normalized());
  t_wc.translation = rec.translation;
  return t_wc.inverse();
}

SlamConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Data, "MissingIndexFile: " + path);
  SlamConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::Data, "MalformedLine: " + path + ":" +
                                       std::to_string(line_no) + ": expected key = value");
    cfg.apply(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!is) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::Io, "IoFailure: cannot open " + path);
  os << content;
  if (!os) throw Error(ErrorCode::Io, "IoFailure: short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace udgs

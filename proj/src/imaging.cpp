#include "lbld/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lbld::img {

namespace {

constexpr float kIntensityCutoff = 1.0f / 255.0f;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32_array(std::ostream& os, const Eigen::VectorXf& v) {
  // Little-endian host assumed for the bulk write; fall back bytewise otherwise.
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
}

void read_f32_array(std::istream& is, Eigen::VectorXf& v) {
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
}

void write_f64(std::ostream& os, double d) {
  os.write(reinterpret_cast<const char*>(&d), 8);
}

double read_f64(std::istream& is) {
  double d;
  is.read(reinterpret_cast<char*>(&d), 8);
  return d;
}

Image blank(const RendererConfig& cfg) {
  Image im;
  im.width = cfg.image_width();
  im.height = cfg.image_height();
  im.channels = cfg.image_channels();
  im.pixels = Eigen::VectorXf::Zero(im.size());
  return im;
}

std::vector<Landmark> default_landmarks() {
  // Five non-coplanar points whose ten pairwise distances are all distinct,
  // so no nontrivial rotation maps the set to itself.
  return {
      {{0.80, 0.10, -0.15}, 1.0, 0},
      {{-0.45, 0.70, 0.20}, 1.0, 1},
      {{-0.20, -0.55, 0.60}, 1.0, 2},
      {{0.10, -0.25, -0.75}, 1.0, 0},
      {{0.40, 0.45, 0.50}, 1.0, 1},
  };
}

Eigen::Matrix3d rotation_matrix(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  // Entries are quadratic in q, so q and -q produce bit-identical matrices.
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

std::string dataset_name(Dataset d) {
  switch (d) {
    case Dataset::Gaussians: return "g";
    case Dataset::GaussiansRotOnly: return "g-rot";
    case Dataset::Sundial: return "s";
    case Dataset::Rotations: return "r";
    case Dataset::FlatSquare: return "flat-square";
  }
  return "?";
}

Dataset dataset_from_name(const std::string& name) {
  if (name == "g") return Dataset::Gaussians;
  if (name == "g-rot" || name == "g_rot" || name == "grot") return Dataset::GaussiansRotOnly;
  if (name == "s") return Dataset::Sundial;
  if (name == "r") return Dataset::Rotations;
  if (name == "flat-square" || name == "flat_square") return Dataset::FlatSquare;
  throw std::invalid_argument("unknown dataset: " + name);
}

RendererConfig RendererConfig::defaults(Dataset kind, int resolution) {
  RendererConfig cfg;
  cfg.kind = kind;
  cfg.resolution = resolution;
  if (kind == Dataset::Rotations) cfg.landmarks = default_landmarks();
  return cfg;
}

void RendererConfig::validate() const {
  if (kind != Dataset::FlatSquare && resolution < 8)
    throw std::invalid_argument("renderer: resolution must be >= 8");
  if (kind == Dataset::Gaussians || kind == Dataset::GaussiansRotOnly) {
    if (!(scale_lo > 0.0 && scale_hi > scale_lo))
      throw std::invalid_argument("renderer: scale range must be positive and increasing");
    if (!(trans_hi > trans_lo)) throw std::invalid_argument("renderer: empty translation square");
    if (!(aspect > 0.0) || !(base_width > 0.0))
      throw std::invalid_argument("renderer: aspect and base width must be positive");
  }
  if (kind == Dataset::Sundial) {
    if (!(rod_height > 0.0 && rod_height < 1.0))
      throw std::invalid_argument("renderer: rod height must lie in (0,1)");
    if (!(shadow_sigma_orth > 0.0) || !(variance_floor > 0.0))
      throw std::invalid_argument("renderer: shadow widths must be positive");
  }
  if (kind == Dataset::Rotations) {
    if (landmarks.size() < 4) throw std::invalid_argument("renderer: need >= 4 landmarks");
    // Non-coplanar.
    Eigen::MatrixXd diffs(3, landmarks.size() - 1);
    for (std::size_t i = 1; i < landmarks.size(); ++i)
      diffs.col(static_cast<int>(i - 1)) = landmarks[i].position - landmarks[0].position;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs);
    if (svd.singularValues().minCoeff() < 1e-6)
      throw std::invalid_argument("renderer: landmarks are coplanar");
    // No rotational symmetry: all pairwise distances distinct.
    std::vector<double> ds;
    for (std::size_t i = 0; i < landmarks.size(); ++i)
      for (std::size_t j = i + 1; j < landmarks.size(); ++j)
        ds.push_back((landmarks[i].position - landmarks[j].position).norm());
    std::sort(ds.begin(), ds.end());
    for (std::size_t i = 1; i < ds.size(); ++i)
      if (ds[i] - ds[i - 1] < 1e-3)
        throw std::invalid_argument("renderer: landmark pairwise distances not distinct");
    if (!(blob_sigma > 0.0)) throw std::invalid_argument("renderer: blob sigma must be positive");
  }
}

geo::Manifold make_manifold(const RendererConfig& cfg) {
  switch (cfg.kind) {
    case Dataset::Gaussians:
      return geo::Manifold::product(
          {geo::Manifold::circle(kPi), geo::Manifold::interval(cfg.scale_lo, cfg.scale_hi),
           geo::Manifold::interval(cfg.trans_lo, cfg.trans_hi),
           geo::Manifold::interval(cfg.trans_lo, cfg.trans_hi)});
    case Dataset::GaussiansRotOnly:
      return geo::Manifold::circle(kPi);
    case Dataset::Sundial:
      return geo::Manifold::hemisphere2();
    case Dataset::Rotations:
      return geo::Manifold::so3();
    case Dataset::FlatSquare:
      return geo::Manifold::product(
          {geo::Manifold::interval(0.0, 1.0), geo::Manifold::interval(0.0, 1.0)});
  }
  throw std::invalid_argument("make_manifold: unknown dataset");
}

double default_epsilon(Dataset kind) {
  switch (kind) {
    case Dataset::Gaussians:
    case Dataset::GaussiansRotOnly:
    case Dataset::Sundial:
      return kPi / 2;
    case Dataset::Rotations:
      return kPi / 4;
    case Dataset::FlatSquare:
      return 0.25;
  }
  return 0.25;
}

int default_latent(Dataset kind) {
  return kind == Dataset::Rotations ? 16 : 8;
}

bool locality_on_first_factor_only(Dataset kind) {
  return kind == Dataset::Gaussians;
}

Image render_gaussian(const RendererConfig& cfg, double alpha, double scale, double x1,
                      double x2) {
  Image im = blank(cfg);
  const double span = cfg.trans_hi - cfg.trans_lo;
  const double px = span / cfg.resolution;
  const double s1 = cfg.base_width * scale;
  const double s2 = s1 / cfg.aspect;
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  for (int r = 0; r < cfg.resolution; ++r) {
    const double uy = cfg.trans_lo + (r + 0.5) * px;
    for (int c = 0; c < cfg.resolution; ++c) {
      const double ux = cfg.trans_lo + (c + 0.5) * px;
      const double dx = ux - x1, dy = uy - x2;
      const double p = (dx * ca + dy * sa) / s1;
      const double q = (-dx * sa + dy * ca) / s2;
      double v = std::exp(-0.5 * (p * p + q * q));
      if (v < kIntensityCutoff) v = 0.0;
      im.at(r, c) = static_cast<float>(std::min(1.0, v));
    }
  }
  return im;
}

Eigen::Vector2d sundial_shadow_point(const RendererConfig& cfg, const Eigen::Vector3d& sun) {
  const double denom = cfg.rod_height - sun[2];
  if (denom == 0.0)
    throw DegenerateGeometryError("sundial: sun/tip line parallel to the ground plane");
  const double k = cfg.rod_height / denom;
  return Eigen::Vector2d(sun[0] * k, sun[1] * k);
}

Image render_sundial(const RendererConfig& cfg, const Eigen::Vector3d& sun) {
  Image im = blank(cfg);
  const Eigen::Vector2d y = sundial_shadow_point(cfg, sun);
  const double ylen = y.norm();
  Eigen::Vector2d dir = ylen > 1e-12 ? (y / ylen).eval() : Eigen::Vector2d(1.0, 0.0);
  const Eigen::Vector2d center = 0.5 * y;
  const double var_along = std::max(ylen, cfg.variance_floor);
  const double var_orth = cfg.shadow_sigma_orth * cfg.shadow_sigma_orth;
  const double w = cfg.view_halfwidth;
  const double px = 2.0 * w / cfg.resolution;
  for (int r = 0; r < cfg.resolution; ++r) {
    const double uy = (r + 0.5) * px - w;
    for (int c = 0; c < cfg.resolution; ++c) {
      const double ux = (c + 0.5) * px - w;
      const double dx = ux - center[0], dy = uy - center[1];
      const double a = dx * dir[0] + dy * dir[1];
      const double b = -dx * dir[1] + dy * dir[0];
      double v = std::exp(-0.5 * (a * a / var_along + b * b / var_orth));
      if (v < kIntensityCutoff) v = 0.0;
      im.at(r, c) = static_cast<float>(std::min(1.0, v));
    }
  }
  return im;
}

Image render_rotated(const RendererConfig& cfg, const Eigen::Vector4d& quat) {
  Image im = blank(cfg);
  const Eigen::Matrix3d rot = rotation_matrix(quat);
  const double w = cfg.view_halfwidth_r;
  const double px = 2.0 * w / cfg.resolution;
  const double inv2s2 = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
  for (const Landmark& lm : cfg.landmarks) {
    const Eigen::Vector3d p = rot * lm.position;
    for (int r = 0; r < cfg.resolution; ++r) {
      const double uy = (r + 0.5) * px - w;
      for (int c = 0; c < cfg.resolution; ++c) {
        const double ux = (c + 0.5) * px - w;
        const double d2 = (ux - p[0]) * (ux - p[0]) + (uy - p[1]) * (uy - p[1]);
        const double v = lm.intensity * std::exp(-d2 * inv2s2);
        float& dst = im.at(r, c, lm.channel);
        dst = static_cast<float>(std::min(1.0, dst + v));
      }
    }
  }
  for (int i = 0; i < im.size(); ++i)
    if (im.pixels[i] < kIntensityCutoff) im.pixels[i] = 0.0f;
  return im;
}

Image render(const RendererConfig& cfg, const geo::Point& p) {
  switch (cfg.kind) {
    case Dataset::Gaussians:
      return render_gaussian(cfg, p.coords[0], p.coords[1], p.coords[2], p.coords[3]);
    case Dataset::GaussiansRotOnly: {
      const double mid_scale = 0.5 * (cfg.scale_lo + cfg.scale_hi);
      const double mid = 0.5 * (cfg.trans_lo + cfg.trans_hi);
      return render_gaussian(cfg, p.coords[0], mid_scale, mid, mid);
    }
    case Dataset::Sundial:
      return render_sundial(cfg, Eigen::Vector3d(p.coords[0], p.coords[1], p.coords[2]));
    case Dataset::Rotations:
      return render_rotated(cfg, Eigen::Vector4d(p.coords[0], p.coords[1], p.coords[2], p.coords[3]));
    case Dataset::FlatSquare: {
      Image im = blank(cfg);
      im.pixels[0] = static_cast<float>(p.coords[0]);
      im.pixels[1] = static_cast<float>(p.coords[1]);
      return im;
    }
  }
  throw std::invalid_argument("render: unknown dataset");
}

Triplet make_triplet(const geo::Manifold& m, const RendererConfig& cfg, double eps, Rng& rng) {
  for (;;) {
    auto [x, y] = locality_on_first_factor_only(cfg.kind)
                      ? geo::sample_pair_factor_local(m, eps, rng, 0)
                      : geo::sample_pair(m, eps, rng);
    const double d = geo::distance(m, x, y);
    if (d < 1e-6 * eps) continue;  // difference quotients divide by d
    Triplet t;
    t.x = render(cfg, x);
    t.y = render(cfg, y);
    t.av = render(cfg, geo::average(m, x, y, 0.5));
    t.dist = d;
    return t;
  }
}

Image quantize(const Image& img) {
  Image out = img;
  for (int i = 0; i < out.size(); ++i) out.pixels[i] = out.pixels[i] >= 0.5f ? 1.0f : 0.0f;
  return out;
}

void write_pnm(const Image& img, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  if (img.channels == 1) {
    os << "P5\n" << img.width << " " << img.height << "\n255\n";
  } else if (img.channels == 3) {
    os << "P6\n" << img.width << " " << img.height << "\n255\n";
  } else {
    throw std::invalid_argument("write_pnm: unsupported channel count");
  }
  std::vector<unsigned char> bytes(static_cast<std::size_t>(img.size()));
  for (int i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    bytes[static_cast<std::size_t>(i)] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_dataset(const std::vector<Triplet>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("write_dataset: no records");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write("LBLD", 4);
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(records.size()));
  write_u32(os, static_cast<std::uint32_t>(records[0].x.width));
  write_u32(os, static_cast<std::uint32_t>(records[0].x.height));
  write_u32(os, static_cast<std::uint32_t>(records[0].x.channels));
  for (const Triplet& t : records) {
    write_f32_array(os, t.x.pixels);
    write_f32_array(os, t.y.pixels);
    write_f32_array(os, t.av.pixels);
    write_f64(os, t.dist);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<Triplet> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, "LBLD", 4) != 0) throw std::runtime_error("not a dataset file: " + path);
  const std::uint32_t version = read_u32(is);
  if (version != 1) throw std::runtime_error("unsupported dataset version");
  const std::uint32_t count = read_u32(is);
  const int w = static_cast<int>(read_u32(is));
  const int h = static_cast<int>(read_u32(is));
  const int ch = static_cast<int>(read_u32(is));
  std::vector<Triplet> records(count);
  for (auto& t : records) {
    for (Image* im : {&t.x, &t.y, &t.av}) {
      im->width = w;
      im->height = h;
      im->channels = ch;
      im->pixels.resize(w * h * ch);
      read_f32_array(is, im->pixels);
    }
    t.dist = read_f64(is);
  }
  if (!is) throw std::runtime_error("truncated dataset file: " + path);
  return records;
}

}  // namespace lbld::img

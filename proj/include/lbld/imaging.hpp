#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "lbld/common.hpp"
#include "lbld/geometry.hpp"

namespace lbld::img {

// Grayscale or RGB image with pixels in [0,1], row-major, channel-interleaved.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  Eigen::VectorXf pixels;

  int size() const { return width * height * channels; }
  float& at(int row, int col, int ch = 0) {
    return pixels[(row * width + col) * channels + ch];
  }
  float at(int row, int col, int ch = 0) const {
    return pixels[(row * width + col) * channels + ch];
  }
};

// One training record: endpoint images, the image of the geodesic midpoint,
// and the geodesic distance of the endpoints.
struct Triplet {
  Image x, y, av;
  double dist = 0.0;
};

enum class Dataset { Gaussians, GaussiansRotOnly, Sundial, Rotations, FlatSquare };

std::string dataset_name(Dataset d);
Dataset dataset_from_name(const std::string& name);

struct Landmark {
  Eigen::Vector3d position;
  double intensity = 1.0;
  int channel = 0;
};

struct RendererConfig {
  Dataset kind = Dataset::Sundial;
  int resolution = 16;

  // Anisotropic Gaussian dataset: orientation on a circle of circumference pi
  // (the image map is 2-to-1 on a full angle circle), scale range [a,b] is the
  // major std deviation, translations range over [c,d]^2 which is also the
  // viewport.
  double aspect = 2.0;
  double scale_lo = 0.08;
  double scale_hi = 0.16;
  double trans_lo = 0.0;
  double trans_hi = 1.0;
  double base_width = 1.0;

  // Sundial dataset: rod tip at (0,0,rod_height), shadow rendered over the
  // square [-view_halfwidth, view_halfwidth]^2 of the ground plane. The
  // half-width keeps the floor-variance blob resolvable at resolution 16.
  double rod_height = 0.5;
  double shadow_sigma_orth = 0.05;
  double variance_floor = 0.01;
  double view_halfwidth = 0.75;

  // Rotations dataset: landmark splats, orthographic projection, one Gaussian
  // blob per landmark.
  std::vector<Landmark> landmarks;
  double blob_sigma = 0.15;
  double view_halfwidth_r = 1.2;

  static RendererConfig defaults(Dataset kind, int resolution = 16);
  // Throws std::invalid_argument on violated invariants (resolution >= 8,
  // positive scales, landmark set without rotational symmetry).
  void validate() const;

  int image_channels() const { return kind == Dataset::Rotations ? 3 : 1; }
  int image_width() const { return kind == Dataset::FlatSquare ? 2 : resolution; }
  int image_height() const { return kind == Dataset::FlatSquare ? 1 : resolution; }
};

// The sampling manifold that drives a renderer.
geo::Manifold make_manifold(const RendererConfig& cfg);

// Locality radius used when none is configured explicitly.
double default_epsilon(Dataset kind);
// Latent width used when none is configured explicitly.
int default_latent(Dataset kind);
// Whether pair sampling constrains only the orientation circle factor.
bool locality_on_first_factor_only(Dataset kind);

// Deterministic renderers. All map into [0,1].
Image render(const RendererConfig& cfg, const geo::Point& p);
Image render_gaussian(const RendererConfig& cfg, double alpha, double scale, double x1, double x2);
Image render_sundial(const RendererConfig& cfg, const Eigen::Vector3d& sun);
Image render_rotated(const RendererConfig& cfg, const Eigen::Vector4d& quat);

// Ground-plane point hit by the line through the sun position and the rod
// tip; the shadow model's geometric core, exposed for direct checks.
Eigen::Vector2d sundial_shadow_point(const RendererConfig& cfg, const Eigen::Vector3d& sun);

// Draws a pair (rejecting numerically coincident ones), renders endpoints and
// geodesic midpoint. Acceptance requires dist >= 1e-6 * eps so the
// difference-quotient denominators stay safe.
Triplet make_triplet(const geo::Manifold& m, const RendererConfig& cfg, double eps, Rng& rng);

// Pixelwise threshold at 0.5 (>= maps to 1).
Image quantize(const Image& img);

// Binary PGM (P5) for single-channel, PPM (P6) for RGB images.
void write_pnm(const Image& img, const std::string& path);

// Dataset container: magic "LBLD", version 1, shape header, then per record
// three little-endian f32 images and one f64 distance.
void write_dataset(const std::vector<Triplet>& records, const std::string& path);
std::vector<Triplet> read_dataset(const std::string& path);

}  // namespace lbld::img

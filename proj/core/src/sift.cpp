#include "mugmatch/sift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double det3(double a11, double a12, double a13, double a21, double a22, double a23, double a31,
            double a32, double a33) {
  return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
         a13 * (a21 * a32 - a22 * a31);
}

double wrap_angle(double theta) {
  while (theta < 0.0) theta += kTwoPi;
  while (theta >= kTwoPi) theta -= kTwoPi;
  return theta;
}

}  // namespace

int PyramidParams::num_octaves_for(int width, int height) const {
  int m = std::min(width, height);
  if (upsample_input) m *= 2;
  if (m < min_image_size) return 0;
  return static_cast<int>(std::floor(std::log2(static_cast<double>(m) / min_image_size))) + 1;
}

void PyramidParams::validate() const {
  if (scales_per_octave < 1) {
    throw Error(ErrorCode::InvalidArgument, "scales_per_octave must be >= 1");
  }
  if (!(base_sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "base_sigma must be positive");
  }
  if (contrast_threshold < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "contrast_threshold must be >= 0");
  }
  if (edge_ratio < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "edge_ratio must be >= 1");
  }
  if (assumed_input_blur < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "assumed_input_blur must be >= 0");
  }
  if (min_image_size < 4) {
    throw Error(ErrorCode::InvalidArgument, "min_image_size must be >= 4");
  }
}

GaussianPyramid build_gaussian_pyramid(const GrayImage& img, const PyramidParams& params) {
  params.validate();
  if (std::min(img.width, img.height) < params.min_image_size) {
    throw Error(ErrorCode::ImageTooSmall,
                std::to_string(img.width) + "x" + std::to_string(img.height) + " is below " +
                    std::to_string(params.min_image_size));
  }

  const int S = params.scales_per_octave;
  const int num_octaves = params.num_octaves_for(img.width, img.height);
  const double input_blur = params.assumed_input_blur * (params.upsample_input ? 2.0 : 1.0);
  if (input_blur >= params.base_sigma) {
    throw Error(ErrorCode::InvalidArgument, "assumed input blur exceeds base_sigma");
  }

  GaussianPyramid pyramid;
  pyramid.scales_per_octave = S;
  pyramid.base_sigma = params.base_sigma;
  pyramid.base_scale = params.upsample_input ? 0.5 : 1.0;

  std::vector<double> rel_sigma(S + 3);
  for (int s = 0; s < S + 3; ++s) {
    rel_sigma[s] = params.base_sigma * std::pow(2.0, static_cast<double>(s) / S);
  }

  GrayImage current = params.upsample_input ? upsample_double(img) : img;
  for (int o = 0; o < num_octaves; ++o) {
    std::vector<GaussianPyramid::Level> levels;
    levels.reserve(S + 3);
    if (o == 0) {
      const double d = std::sqrt(params.base_sigma * params.base_sigma - input_blur * input_blur);
      levels.push_back({gaussian_blur(current, d), 0.0});
    } else {
      // The seed was downsampled from relative blur 2*sigma0, i.e. already at sigma0 here.
      levels.push_back({std::move(current), 0.0});
    }
    for (int s = 1; s < S + 3; ++s) {
      const double d = std::sqrt(rel_sigma[s] * rel_sigma[s] - rel_sigma[s - 1] * rel_sigma[s - 1]);
      levels.push_back({gaussian_blur(levels[s - 1].image, d), 0.0});
    }
    for (int s = 0; s < S + 3; ++s) {
      levels[s].sigma = rel_sigma[s] * std::ldexp(pyramid.base_scale, o);
    }
    if (o + 1 < num_octaves) {
      current = downsample_half(levels[S].image);
    }
    pyramid.octaves.push_back(std::move(levels));
  }
  return pyramid;
}

DoGPyramid build_dog_pyramid(const GaussianPyramid& pyramid) {
  DoGPyramid dog;
  dog.scales_per_octave = pyramid.scales_per_octave;
  for (const auto& levels : pyramid.octaves) {
    std::vector<GrayImage> diffs;
    diffs.reserve(levels.size() - 1);
    for (std::size_t s = 0; s + 1 < levels.size(); ++s) {
      const GrayImage& lo = levels[s].image;
      const GrayImage& hi = levels[s + 1].image;
      GrayImage d(lo.width, lo.height);
      for (std::size_t i = 0; i < d.size(); ++i) {
        d.pixels[i] = hi.pixels[i] - lo.pixels[i];
      }
      diffs.push_back(std::move(d));
    }
    dog.octaves.push_back(std::move(diffs));
  }
  return dog;
}

std::vector<ExtremumCandidate> detect_extrema(const DoGPyramid& dog) {
  std::vector<ExtremumCandidate> out;
  const int S = dog.scales_per_octave;
  for (int o = 0; o < static_cast<int>(dog.octaves.size()); ++o) {
    const auto& levels = dog.octaves[o];
    const int w = levels[0].width;
    const int h = levels[0].height;
    for (int s = 1; s <= S; ++s) {
      const GrayImage& below = levels[s - 1];
      const GrayImage& mid = levels[s];
      const GrayImage& above = levels[s + 1];
      for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
          const float v = mid.at(x, y);
          bool is_max = true;
          bool is_min = true;
          for (int ds = -1; ds <= 1 && (is_max || is_min); ++ds) {
            const GrayImage& level = ds < 0 ? below : (ds > 0 ? above : mid);
            for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                if (ds == 0 && dy == 0 && dx == 0) continue;
                const float n = level.at(x + dx, y + dy);
                if (n >= v) is_max = false;
                if (n <= v) is_min = false;
                if (!is_max && !is_min) break;
              }
            }
          }
          if (is_max || is_min) {
            out.push_back({o, s, x, y});
          }
        }
      }
    }
  }
  return out;
}

std::variant<Keypoint, KeypointRejection> localize_keypoint(const DoGPyramid& dog,
                                                            const ExtremumCandidate& candidate,
                                                            const PyramidParams& params,
                                                            double base_scale) {
  const auto& levels = dog.octaves.at(candidate.octave);
  const int S = dog.scales_per_octave;
  const int w = levels[0].width;
  const int h = levels[0].height;

  int ix = candidate.x;
  int iy = candidate.y;
  int is = candidate.scale_index;
  double ox = 0.0, oy = 0.0, os = 0.0;
  double gx = 0.0, gy = 0.0, gs = 0.0;
  double center = 0.0;
  bool converged = false;

  for (int iter = 0; iter < 5; ++iter) {
    const GrayImage& d0 = levels[is - 1];
    const GrayImage& d1 = levels[is];
    const GrayImage& d2 = levels[is + 1];

    center = d1.at(ix, iy);
    gx = 0.5 * (d1.at(ix + 1, iy) - d1.at(ix - 1, iy));
    gy = 0.5 * (d1.at(ix, iy + 1) - d1.at(ix, iy - 1));
    gs = 0.5 * (d2.at(ix, iy) - d0.at(ix, iy));

    const double dxx = d1.at(ix + 1, iy) + d1.at(ix - 1, iy) - 2.0 * center;
    const double dyy = d1.at(ix, iy + 1) + d1.at(ix, iy - 1) - 2.0 * center;
    const double dss = d2.at(ix, iy) + d0.at(ix, iy) - 2.0 * center;
    const double dxy = 0.25 * (d1.at(ix + 1, iy + 1) - d1.at(ix - 1, iy + 1) -
                               d1.at(ix + 1, iy - 1) + d1.at(ix - 1, iy - 1));
    const double dxs = 0.25 * (d2.at(ix + 1, iy) - d2.at(ix - 1, iy) -
                               d0.at(ix + 1, iy) + d0.at(ix - 1, iy));
    const double dys = 0.25 * (d2.at(ix, iy + 1) - d2.at(ix, iy - 1) -
                               d0.at(ix, iy + 1) + d0.at(ix, iy - 1));

    const double det = det3(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
    if (std::abs(det) < 1e-30) return KeypointRejection::Diverged;

    const double bx = -gx, by = -gy, bs = -gs;
    ox = det3(bx, dxy, dxs, by, dyy, dys, bs, dys, dss) / det;
    oy = det3(dxx, bx, dxs, dxy, by, dys, dxs, bs, dss) / det;
    os = det3(dxx, dxy, bx, dxy, dyy, by, dxs, dys, bs) / det;

    if (std::abs(ox) <= 0.5 && std::abs(oy) <= 0.5 && std::abs(os) <= 0.5) {
      converged = true;
      break;
    }

    ix += ox > 0.5 ? 1 : (ox < -0.5 ? -1 : 0);
    iy += oy > 0.5 ? 1 : (oy < -0.5 ? -1 : 0);
    is += os > 0.5 ? 1 : (os < -0.5 ? -1 : 0);
    if (ix < 1 || ix > w - 2 || iy < 1 || iy > h - 2 || is < 1 || is > S) {
      return KeypointRejection::Diverged;
    }
  }
  if (!converged) return KeypointRejection::Diverged;

  const double value = center + 0.5 * (gx * ox + gy * oy + gs * os);
  if (std::abs(value) < params.contrast_threshold) return KeypointRejection::LowContrast;

  {
    const GrayImage& d1 = levels[is];
    const double v = d1.at(ix, iy);
    const double dxx = d1.at(ix + 1, iy) + d1.at(ix - 1, iy) - 2.0 * v;
    const double dyy = d1.at(ix, iy + 1) + d1.at(ix, iy - 1) - 2.0 * v;
    const double dxy = 0.25 * (d1.at(ix + 1, iy + 1) - d1.at(ix - 1, iy + 1) -
                               d1.at(ix + 1, iy - 1) + d1.at(ix - 1, iy - 1));
    const double trace = dxx + dyy;
    const double det2 = dxx * dyy - dxy * dxy;
    const double r = params.edge_ratio;
    if (det2 <= 0.0 || trace * trace * r >= (r + 1.0) * (r + 1.0) * det2) {
      return KeypointRejection::EdgeResponse;
    }
  }

  const double factor = std::ldexp(base_scale, candidate.octave);
  Keypoint kp;
  kp.x = static_cast<float>((ix + ox) * factor);
  kp.y = static_cast<float>((iy + oy) * factor);
  kp.octave = candidate.octave;
  kp.scale_index = is;
  kp.sigma = static_cast<float>(
      params.base_sigma * std::pow(2.0, candidate.octave + (is + os) / S) * base_scale);
  kp.response = static_cast<float>(value);
  return kp;
}

std::vector<Keypoint> assign_orientations(const GaussianPyramid& pyramid, const Keypoint& keypoint) {
  const int S = pyramid.scales_per_octave;
  const auto& levels = pyramid.octaves.at(keypoint.octave);
  const GrayImage& img = levels.at(std::clamp(keypoint.scale_index, 1, S)).image;

  const double factor = std::ldexp(pyramid.base_scale, keypoint.octave);
  const double xl = keypoint.x / factor;
  const double yl = keypoint.y / factor;
  const double sigma_rel = keypoint.sigma / factor;
  const int ix = static_cast<int>(std::round(xl));
  const int iy = static_cast<int>(std::round(yl));

  const double sw = 1.5 * sigma_rel;
  const int radius = std::max(1, static_cast<int>(std::round(3.0 * sw)));

  constexpr int kBins = 36;
  constexpr double kBinScale = kBins / kTwoPi;
  double hist[kBins] = {};
  double total = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int py = iy + dy;
    if (py < 1 || py > img.height - 2) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = ix + dx;
      if (px < 1 || px > img.width - 2) continue;
      const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
      const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0.0) continue;
      const double ux = px - xl;
      const double uy = py - yl;
      const double wgt = std::exp(-(ux * ux + uy * uy) / (2.0 * sw * sw));
      const double c = wrap_angle(std::atan2(gy, gx)) * kBinScale;
      int i0 = static_cast<int>(c);
      if (i0 >= kBins) i0 = kBins - 1;
      const double f = c - i0;
      hist[i0] += mag * wgt * (1.0 - f);
      hist[(i0 + 1) % kBins] += mag * wgt * f;
      total += mag * wgt;
    }
  }
  if (total < 1e-12) return {};  // flat window: drop the keypoint

  for (int pass = 0; pass < 2; ++pass) {
    double tmp[kBins];
    for (int i = 0; i < kBins; ++i) {
      tmp[i] = (hist[(i + kBins - 1) % kBins] + hist[i] + hist[(i + 1) % kBins]) / 3.0;
    }
    std::copy(tmp, tmp + kBins, hist);
  }

  const double peak_max = *std::max_element(hist, hist + kBins);
  if (peak_max <= 0.0) return {};

  std::vector<Keypoint> out;
  for (int i = 0; i < kBins; ++i) {
    const double h0 = hist[(i + kBins - 1) % kBins];
    const double h1 = hist[i];
    const double h2 = hist[(i + 1) % kBins];
    if (h1 < 0.8 * peak_max) continue;
    const bool peak = (h1 > h0 && h1 >= h2) || (h1 >= h0 && h1 > h2);
    if (!peak) continue;
    const double denom = h0 + h2 - 2.0 * h1;
    const double offset = denom != 0.0 ? 0.5 * (h0 - h2) / denom : 0.0;
    const double orientation = wrap_angle((i + offset) * (kTwoPi / kBins));

    bool duplicate = false;
    for (const Keypoint& prev : out) {
      double diff = std::abs(orientation - prev.orientation);
      diff = std::min(diff, kTwoPi - diff);
      if (diff < 1e-6) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;

    Keypoint kp = keypoint;
    kp.orientation = static_cast<float>(orientation);
    out.push_back(kp);
  }
  return out;
}

std::optional<Descriptor> compute_descriptor(const GaussianPyramid& pyramid, const Keypoint& keypoint) {
  const int S = pyramid.scales_per_octave;
  const auto& levels = pyramid.octaves.at(keypoint.octave);
  const GrayImage& img = levels.at(std::clamp(keypoint.scale_index, 1, S)).image;

  const double factor = std::ldexp(pyramid.base_scale, keypoint.octave);
  const double xl = keypoint.x / factor;
  const double yl = keypoint.y / factor;
  const double sigma_rel = keypoint.sigma / factor;
  const int ix = static_cast<int>(std::round(xl));
  const int iy = static_cast<int>(std::round(yl));

  const double coso = std::cos(keypoint.orientation);
  const double sino = std::sin(keypoint.orientation);
  const double binsize = 3.0 * sigma_rel;
  const int win = static_cast<int>(std::numbers::sqrt2 * binsize * (4 + 1) * 0.5);
  if (ix - win < 1 || ix + win > img.width - 2 || iy - win < 1 || iy + win > img.height - 2) {
    return std::nullopt;
  }

  double hist[128] = {};
  for (int dy = -win; dy <= win; ++dy) {
    const int py = iy + dy;
    for (int dx = -win; dx <= win; ++dx) {
      const int px = ix + dx;
      const double gx = 0.5 * (img.at(px + 1, py) - img.at(px - 1, py));
      const double gy = 0.5 * (img.at(px, py + 1) - img.at(px, py - 1));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag <= 0.0) continue;

      const double wx = px - xl;
      const double wy = py - yl;
      const double rx = (coso * wx + sino * wy) / binsize;
      const double ry = (-sino * wx + coso * wy) / binsize;
      const double wght = std::exp(-(rx * rx + ry * ry) / 8.0);  // spatial sigma: 2 bin units

      const double theta = wrap_angle(std::atan2(gy, gx) - keypoint.orientation);
      const double binx = rx + 1.5;
      const double biny = ry + 1.5;
      const double bint = theta * (8.0 / kTwoPi) - 0.5;

      const int bx0 = static_cast<int>(std::floor(binx));
      const int by0 = static_cast<int>(std::floor(biny));
      const int bt0 = static_cast<int>(std::floor(bint));
      const double fx = binx - bx0;
      const double fy = biny - by0;
      const double ft = bint - bt0;

      for (int a = 0; a < 2; ++a) {
        const int bx = bx0 + a;
        if (bx < 0 || bx > 3) continue;
        for (int b = 0; b < 2; ++b) {
          const int by = by0 + b;
          if (by < 0 || by > 3) continue;
          for (int t = 0; t < 2; ++t) {
            const int bt = (bt0 + t + 8) % 8;
            const double w = mag * wght * (a ? fx : 1.0 - fx) * (b ? fy : 1.0 - fy) *
                             (t ? ft : 1.0 - ft);
            hist[(by * 4 + bx) * 8 + bt] += w;
          }
        }
      }
    }
  }

  /* Normalise, clamp at 0.2, renormalise; iterate because renormalising can
   * push clamped components back over the cap.  Converges unless too few
   * cells carry energy, in which case the patch is degenerate. */
  bool ok = false;
  for (int iter = 0; iter < 64; ++iter) {
    double norm2 = 0.0;
    for (double h : hist) norm2 += h * h;
    if (norm2 < 1e-24) return std::nullopt;
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& h : hist) h *= inv;
    const double mx = *std::max_element(hist, hist + 128);
    if (mx <= 0.2 + 1e-7) {
      ok = true;
      break;
    }
    for (double& h : hist) h = std::min(h, 0.2);
  }
  if (!ok) return std::nullopt;

  Descriptor desc;
  for (int i = 0; i < 128; ++i) desc.values[i] = static_cast<float>(hist[i]);
  return desc;
}

FeatureSet extract_features(const GrayImage& img, const PyramidParams& params) {
  const GaussianPyramid pyramid = build_gaussian_pyramid(img, params);
  const DoGPyramid dog = build_dog_pyramid(pyramid);
  const std::vector<ExtremumCandidate> candidates = detect_extrema(dog);

  FeatureSet features;
  features.source_width = img.width;
  features.source_height = img.height;
  for (const ExtremumCandidate& candidate : candidates) {
    const auto localized = localize_keypoint(dog, candidate, params, pyramid.base_scale);
    const Keypoint* kp = std::get_if<Keypoint>(&localized);
    if (kp == nullptr) continue;
    for (const Keypoint& oriented : assign_orientations(pyramid, *kp)) {
      if (std::optional<Descriptor> desc = compute_descriptor(pyramid, oriented)) {
        features.keypoints.push_back(oriented);
        features.descriptors.push_back(*desc);
      }
    }
  }
  return features;
}

}  // namespace mugmatch

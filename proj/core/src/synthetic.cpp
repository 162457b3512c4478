#include "mugmatch/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mugmatch/errors.hpp"

namespace mugmatch {

namespace {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
  std::mt19937_64 engine_;
};

void fill_ellipse(GrayImage& img, double cx, double cy, double rx, double ry, float value,
                  double blend = 1.0) {
  const int x0 = std::max(0, static_cast<int>(cx - rx) - 1);
  const int x1 = std::min(img.width - 1, static_cast<int>(cx + rx) + 1);
  const int y0 = std::max(0, static_cast<int>(cy - ry) - 1);
  const int y1 = std::min(img.height - 1, static_cast<int>(cy + ry) + 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x - cx) / rx;
      const double dy = (y - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) {
        img.at(x, y) = static_cast<float>((1.0 - blend) * img.at(x, y) + blend * value);
      }
    }
  }
}

void add_blob(GrayImage& img, double cx, double cy, double sigma, double amplitude) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  const int x0 = std::max(0, static_cast<int>(cx) - r);
  const int x1 = std::min(img.width - 1, static_cast<int>(cx) + r);
  const int y0 = std::max(0, static_cast<int>(cy) - r);
  const int y1 = std::min(img.height - 1, static_cast<int>(cy) + r);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double g = amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      img.at(x, y) = static_cast<float>(std::clamp(img.at(x, y) + g, 0.0, 1.0));
    }
  }
}

bool inside_ellipse(double x, double y, double cx, double cy, double rx, double ry) {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

}  // namespace

GrayImage synthetic_face(int identity_index, int width, int height) {
  if (width < 32 || height < 32) {
    throw Error(ErrorCode::ImageTooSmall, "synthetic faces need at least 32x32");
  }
  Rng rng(7000 + 13 * static_cast<std::uint64_t>(identity_index));
  const double sx = width / 300.0;
  const double sy = height / 300.0;

  GrayImage img(width, height);
  const double bg = rng.uniform(0.72, 0.88);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y) = static_cast<float>(bg - 0.06 * y / height + 0.02 * x / width);
    }
  }

  // Shoulders and collar under the head.
  const double shoulder_y = height * rng.uniform(0.88, 0.95);
  const double shoulder_r = width * rng.uniform(0.42, 0.5);
  const double shirt = rng.uniform(0.15, 0.45);
  fill_ellipse(img, width * 0.5, shoulder_y + shoulder_r * 0.35, shoulder_r, shoulder_r,
               static_cast<float>(shirt));
  for (int i = 0; i < 12; ++i) {
    const double bx = width * 0.5 + rng.uniform(-0.8, 0.8) * shoulder_r;
    const double by = shoulder_y + rng.uniform(0.0, 0.3) * shoulder_r;
    add_blob(img, bx, by, rng.uniform(2.0, 5.0) * sx, rng.uniform(0.15, 0.35) * (rng.uniform01() < 0.5 ? -1.0 : 1.0));
  }

  // Head.
  const double cx = (150.0 + rng.uniform(-8.0, 8.0)) * sx;
  const double cy = (158.0 + rng.uniform(-8.0, 8.0)) * sy;
  const double head_rx = (95.0 + rng.uniform(-12.0, 12.0)) * sx;
  const double head_ry = (122.0 + rng.uniform(-10.0, 12.0)) * sy;
  const double skin = rng.uniform(0.45, 0.66);
  fill_ellipse(img, cx, cy, head_rx, head_ry, static_cast<float>(skin));

  // Hair: a darker cap over the top of the head ellipse, with lighter strands.
  const double hair = rng.uniform(0.08, 0.30);
  const double hairline = cy - head_ry * rng.uniform(0.35, 0.55);
  const double strand_freq = rng.uniform(0.25, 0.45);
  const double strand_phase = rng.uniform(0.0, 6.28);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (y < hairline && inside_ellipse(x, y, cx, cy, head_rx * 1.04, head_ry * 1.04)) {
        const double strands = 0.08 * std::sin(strand_freq * x + strand_phase + 0.07 * y);
        img.at(x, y) = static_cast<float>(std::clamp(hair + strands, 0.0, 1.0));
      }
    }
  }

  // Eyes, irises, pupils and brows.
  const double eye_dx = (38.0 + rng.uniform(-6.0, 6.0)) * sx;
  const double eye_y = cy - (26.0 + rng.uniform(-6.0, 6.0)) * sy;
  const double eye_rx = (16.0 + rng.uniform(-3.0, 3.0)) * sx;
  const double eye_ry = (9.0 + rng.uniform(-2.0, 2.0)) * sy;
  const double iris = rng.uniform(0.10, 0.35);
  const double iris_r = (6.0 + rng.uniform(-1.5, 2.0)) * sx;
  for (int side = -1; side <= 1; side += 2) {
    const double ex = cx + side * eye_dx;
    fill_ellipse(img, ex, eye_y, eye_rx, eye_ry, 0.92f);
    fill_ellipse(img, ex, eye_y, iris_r, iris_r, static_cast<float>(iris));
    fill_ellipse(img, ex, eye_y, iris_r * 0.4, iris_r * 0.4, 0.03f);
    add_blob(img, ex + iris_r * 0.35, eye_y - iris_r * 0.35, 1.3 * sx, 0.5);  // catchlight
    // Brow.
    const double brow_y = eye_y - (14.0 + rng.uniform(-2.0, 3.0)) * sy;
    fill_ellipse(img, ex, brow_y, eye_rx * 1.2, 3.0 * sy, static_cast<float>(hair * 0.9));
  }

  // Nose: a soft vertical wedge plus nostrils.
  const double nose_len = (34.0 + rng.uniform(-6.0, 6.0)) * sy;
  const double nose_w = (7.0 + rng.uniform(-1.5, 2.0)) * sx;
  for (double t = 0.0; t <= 1.0; t += 0.04) {
    fill_ellipse(img, cx, eye_y + 8.0 * sy + t * nose_len, nose_w * (0.4 + 0.6 * t), 2.2 * sy,
                 static_cast<float>(skin * 0.82), 0.6);
  }
  const double nostril_y = eye_y + 8.0 * sy + nose_len;
  fill_ellipse(img, cx - nose_w * 0.8, nostril_y, 2.6 * sx, 1.8 * sy, 0.12f);
  fill_ellipse(img, cx + nose_w * 0.8, nostril_y, 2.6 * sx, 1.8 * sy, 0.12f);

  // Mouth.
  const double mouth_y = cy + (56.0 + rng.uniform(-8.0, 8.0)) * sy;
  const double mouth_rx = (34.0 + rng.uniform(-8.0, 8.0)) * sx;
  const double mouth_ry = (7.0 + rng.uniform(-2.0, 3.0)) * sy;
  fill_ellipse(img, cx, mouth_y, mouth_rx, mouth_ry, static_cast<float>(rng.uniform(0.18, 0.34)));
  fill_ellipse(img, cx, mouth_y - mouth_ry * 0.4, mouth_rx * 0.9, mouth_ry * 0.35, 0.10f);

  // Cheek and forehead shading.
  for (int i = 0; i < 6; ++i) {
    const double bx = cx + rng.uniform(-0.7, 0.7) * head_rx;
    const double by = cy + rng.uniform(-0.7, 0.7) * head_ry;
    add_blob(img, bx, by, rng.uniform(10.0, 20.0) * sx, rng.uniform(-0.06, 0.06));
  }

  /* Skin blemish constellation: the identity specific texture that keypoint
   * matching latches onto.  Amplitudes are strong enough to survive the
   * pyramid blur and the default contrast threshold. */
  const int speckles = 220;
  for (int i = 0; i < speckles; ++i) {
    double bx = 0.0, by = 0.0;
    do {
      bx = cx + rng.uniform(-1.0, 1.0) * head_rx;
      by = cy + rng.uniform(-1.0, 1.0) * head_ry;
    } while (!inside_ellipse(bx, by, cx, cy, head_rx * 0.92, head_ry * 0.92));
    const double sigma = rng.uniform(1.4, 4.5) * sx;
    const double amp = rng.uniform(0.10, 0.30) * (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    add_blob(img, bx, by, sigma, amp);
  }

  GrayImage out = gaussian_blur(img, 0.6);
  for (float& p : out.pixels) p = std::clamp(p, 0.0f, 1.0f);
  return out;
}

GrayImage textured_test_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(width, height);
  const int cell = 20;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool dark = ((x / cell) + (y / cell)) % 2 == 0;
      double v = dark ? 0.3 : 0.7;
      v += rng.uniform(-0.1, 0.1);
      img.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  GrayImage out = gaussian_blur(img, 0.8);
  for (float& p : out.pixels) p = std::clamp(p, 0.0f, 1.0f);
  return out;
}

}  // namespace mugmatch

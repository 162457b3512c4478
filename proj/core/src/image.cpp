#include "mugmatch/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "mugmatch/errors.hpp"

namespace mugmatch {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ZeroDimension: return "ZeroDimension";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::TooFewImages: return "TooFewImages";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::EmptyFeatureSet: return "EmptyFeatureSet";
    case ErrorCode::DuplicateIdentity: return "DuplicateIdentity";
    case ErrorCode::UnknownIdentity: return "UnknownIdentity";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ParamsMismatch: return "ParamsMismatch";
    case ErrorCode::StaleEigenModel: return "StaleEigenModel";
    case ErrorCode::SpecOutOfRange: return "SpecOutOfRange";
    case ErrorCode::EmptyOutcomes: return "EmptyOutcomes";
  }
  return "UnknownError";
}

GrayImage to_grayscale(const ColorImage& img) {
  if (img.empty()) {
    throw Error(ErrorCode::ZeroDimension, "to_grayscale: empty image");
  }
  GrayImage out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = 0.299 * img.pixels[3 * i + 0] + 0.587 * img.pixels[3 * i + 1] +
                     0.114 * img.pixels[3 * i + 2];
    out.pixels[i] = static_cast<float>(std::clamp(y, 0.0, 1.0));
  }
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_width, int out_height) {
  if (out_width < 1 || out_height < 1) {
    throw Error(ErrorCode::ZeroDimension,
                "resize target " + std::to_string(out_width) + "x" + std::to_string(out_height));
  }
  if (img.width < 1 || img.height < 1) {
    throw Error(ErrorCode::ZeroDimension, "resize source is empty");
  }

  GrayImage out(out_width, out_height);
  const double sx = static_cast<double>(img.width) / out_width;
  const double sy = static_cast<double>(img.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      const double v = (1.0 - wy) * ((1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
                       wy * ((1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
      out.at(x, y) = static_cast<float>(v);
    }
  }
  return out;
}

namespace {

/* Mirror without repeating the edge pixel: -1 -> 1, n -> n-2. */
int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    kernel[i + radius] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::NonPositiveSigma, "sigma = " + std::to_string(sigma));
  }
  if (img.width < 1 || img.height < 1) {
    throw Error(ErrorCode::ZeroDimension, "blur source is empty");
  }

  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const std::vector<double> kernel = gaussian_kernel(sigma, radius);

  std::vector<double> tmp(img.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * img.at(reflect101(x + k, img.width), y);
      }
      tmp[static_cast<std::size_t>(y) * img.width + x] = acc;
    }
  }

  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[k + radius] * tmp[static_cast<std::size_t>(reflect101(y + k, img.height)) * img.width + x];
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

GrayImage downsample_half(const GrayImage& img) {
  if (img.width < 2 || img.height < 2) {
    throw Error(ErrorCode::TooSmall,
                "cannot halve " + std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  GrayImage out(img.width / 2, img.height / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.at(x, y) = img.at(2 * x, 2 * y);
    }
  }
  return out;
}

GrayImage upsample_double(const GrayImage& img) {
  if (img.width < 1 || img.height < 1) {
    throw Error(ErrorCode::ZeroDimension, "upsample source is empty");
  }
  GrayImage out(img.width * 2, img.height * 2);
  for (int y = 0; y < out.height; ++y) {
    const int y0 = y / 2;
    const int y1 = std::min(y0 + (y & 1), img.height - 1);
    for (int x = 0; x < out.width; ++x) {
      const int x0 = x / 2;
      const int x1 = std::min(x0 + (x & 1), img.width - 1);
      out.at(x, y) = static_cast<float>(
          0.25 * (static_cast<double>(img.at(x0, y0)) + img.at(x1, y0) + img.at(x0, y1) + img.at(x1, y1)));
    }
  }
  return out;
}

}  // namespace mugmatch

#include "imbassl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "imbassl/errors.hpp"

namespace imbassl {

namespace {

struct AugmentRanges {
  double erase_lo = 0.02;
  double erase_hi = 0.33;
  double jitter_lo = 0.9;
  double jitter_hi = 1.1;
  bool extra_geometric = false;
};

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Bilinear sample with zero outside the image.
double sample(const RgbImage& img, std::size_t c, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  auto px = [&](long xi, long yi) {
    if (xi < 0 || yi < 0 || xi >= w || yi >= h) return 0.0;
    return img.at(c, static_cast<std::size_t>(xi), static_cast<std::size_t>(yi));
  };
  const long x0 = static_cast<long>(fx);
  const long y0 = static_cast<long>(fy);
  return (1 - ax) * (1 - ay) * px(x0, y0) + ax * (1 - ay) * px(x0 + 1, y0) +
         (1 - ax) * ay * px(x0, y0 + 1) + ax * ay * px(x0 + 1, y0 + 1);
}

// Inverse-maps every output pixel through `src_of` and resamples.
template <class Map>
RgbImage remap(const RgbImage& img, Map src_of) {
  RgbImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto [sx, sy] = src_of(static_cast<double>(x), static_cast<double>(y));
      for (std::size_t c = 0; c < 3; ++c) out.at(c, x, y) = sample(img, c, sx, sy);
    }
  }
  return out;
}

RgbImage translate(const RgbImage& img, double dx, double dy) {
  return remap(img, [&](double x, double y) { return std::pair{x - dx, y - dy}; });
}

RgbImage shear(const RgbImage& img, double s) {
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  return remap(img, [&](double x, double y) { return std::pair{x - s * (y - cy), y}; });
}

void erase(RgbImage& img, const augment_detail::Rect& r, Rng& rng) {
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = r.y; y < r.y + r.h; ++y) {
      for (std::size_t x = r.x; x < r.x + r.w; ++x) img.at(c, x, y) = rng.uniform();
    }
  }
}

void adjust_brightness(RgbImage& img, double f) {
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto& v : img.channel(c)) v *= f;
  }
  img.clamp();
}

void adjust_contrast(RgbImage& img, double f) {
  double mean = 0.0;
  const auto r = img.channel(0);
  const auto g = img.channel(1);
  const auto b = img.channel(2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) mean += luminance(r[i], g[i], b[i]);
  mean /= static_cast<double>(img.pixel_count());
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto& v : img.channel(c)) v = mean + f * (v - mean);
  }
  img.clamp();
}

void adjust_saturation(RgbImage& img, double f) {
  auto r = img.channel(0);
  auto g = img.channel(1);
  auto b = img.channel(2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double l = luminance(r[i], g[i], b[i]);
    r[i] = l + f * (r[i] - l);
    g[i] = l + f * (g[i] - l);
    b[i] = l + f * (b[i] - l);
  }
  img.clamp();
}

RgbImage run_pipeline(const RgbImage& img, const AugmentRanges& ranges, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage out = img;
  if (rng.bernoulli(0.5)) out = augment_detail::horizontal_flip(out);
  out = augment_detail::rotate(out, rng.uniform(0.0, 180.0));
  if (ranges.extra_geometric) {
    if (rng.bernoulli(0.5)) {
      out = shear(out, rng.uniform(-0.2, 0.2));
    } else {
      out = translate(out, rng.uniform(-0.2, 0.2) * static_cast<double>(out.width()),
                      rng.uniform(-0.2, 0.2) * static_cast<double>(out.height()));
    }
  }
  const auto rect =
      augment_detail::sample_erase_rect(out.width(), out.height(), ranges.erase_lo, ranges.erase_hi, rng);
  erase(out, rect, rng);
  adjust_brightness(out, rng.uniform(ranges.jitter_lo, ranges.jitter_hi));
  adjust_contrast(out, rng.uniform(ranges.jitter_lo, ranges.jitter_hi));
  adjust_saturation(out, rng.uniform(ranges.jitter_lo, ranges.jitter_hi));
  out.clamp();
  return out;
}

}  // namespace

RgbImage::RgbImage(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(3 * width * height, fill) {
  if (width == 0 || height == 0) throw DimensionError("image dimensions must be positive");
}

double RgbImage::channel_mean(std::size_t c) const {
  double total = 0.0;
  for (double v : channel(c)) total += v;
  return total / static_cast<double>(pixel_count());
}

void RgbImage::clamp() {
  for (auto& v : data_) v = std::clamp(v, 0.0, 1.0);
}

RgbImage color_normalize(const RgbImage& img) {
  const double r_mean = img.channel_mean(0);
  const double g_mean = img.channel_mean(1);
  const double b_mean = img.channel_mean(2);
  if (!(r_mean > 0.0) || !(b_mean > 0.0)) {
    throw DegenerateImageError("color_normalize: red or blue channel has zero mean");
  }
  RgbImage out = img;
  for (auto& v : out.channel(0)) v *= g_mean / r_mean;
  for (auto& v : out.channel(2)) v *= g_mean / b_mean;
  out.clamp();
  return out;
}

RgbImage weak_augment(const RgbImage& img, const PerturbSpec& spec) {
  if (spec.mode != PerturbMode::kWeak) throw ContractError("weak_augment needs a WEAK spec");
  return run_pipeline(img, AugmentRanges{}, spec.rng_seed);
}

RgbImage strong_augment(const RgbImage& img, const PerturbSpec& spec) {
  if (spec.mode != PerturbMode::kStrong) throw ContractError("strong_augment needs a STRONG spec");
  AugmentRanges ranges;
  ranges.erase_hi = 0.5;
  ranges.jitter_lo = 0.6;
  ranges.jitter_hi = 1.4;
  ranges.extra_geometric = true;
  return run_pipeline(img, ranges, spec.rng_seed);
}

std::vector<double> perturb_vector(std::span<const double> x, const PerturbSpec& spec) {
  if (spec.mode != PerturbMode::kVector) throw ContractError("perturb_vector needs a VECTOR spec");
  if (!(spec.noise_sigma >= 0.0)) throw ContractError("noise_sigma must be >= 0");
  std::vector<double> out(x.begin(), x.end());
  if (spec.noise_sigma == 0.0) return out;
  Rng rng(spec.rng_seed);
  for (auto& v : out) v += spec.noise_sigma * rng.normal();
  return out;
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string magic;
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 0;
  in >> magic;
  auto skip_comments = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string ignored;
      std::getline(in, ignored);
      in >> std::ws;
    }
  };
  skip_comments();
  in >> width;
  skip_comments();
  in >> height;
  skip_comments();
  in >> maxval;
  if (magic != "P6" || !in || width == 0 || height == 0 || maxval != 255) {
    throw Error(path.string() + ": unsupported PPM (need P6 with maxval 255)");
  }
  in.get();
  std::vector<unsigned char> bytes(3 * width * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw Error(path.string() + ": truncated PPM");
  RgbImage img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(c, x, y) = bytes[3 * (y * width + x) + c] / 255.0;
    }
  }
  return img;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(3 * img.pixel_count());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, x, y), 0.0, 1.0);
        bytes[3 * (y * img.width() + x) + c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace augment_detail {

Rect sample_erase_rect(std::size_t width, std::size_t height, double lo, double hi, Rng& rng) {
  const double total = static_cast<double>(width * height);
  auto within = [&](const Rect& r) {
    const double frac = static_cast<double>(r.area()) / total;
    return frac >= lo && frac <= hi;
  };
  Rect r;
  for (int attempt = 0; attempt < 32; ++attempt) {
    const double target = rng.uniform(lo, hi) * total;
    const double aspect = std::exp(rng.uniform(std::log(0.3), std::log(1.0 / 0.3)));
    r.h = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(std::sqrt(target * aspect))), 1, height);
    r.w = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(target / static_cast<double>(r.h))), 1, width);
    if (within(r)) break;
  }
  if (!within(r)) {
    // Full-width band; closest achievable fraction to the lower bound.
    r.w = width;
    r.h = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(lo * static_cast<double>(height))), 1, height);
  }
  r.x = static_cast<std::size_t>(rng.below(width - r.w + 1));
  r.y = static_cast<std::size_t>(rng.below(height - r.h + 1));
  return r;
}

RgbImage horizontal_flip(const RgbImage& img) {
  RgbImage out(img.width(), img.height());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) out.at(c, img.width() - 1 - x, y) = img.at(c, x, y);
    }
  }
  return out;
}

RgbImage rotate(const RgbImage& img, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (static_cast<double>(img.width()) - 1.0) / 2.0;
  const double cy = (static_cast<double>(img.height()) - 1.0) / 2.0;
  return remap(img, [&](double x, double y) {
    const double dx = x - cx;
    const double dy = y - cy;
    return std::pair{cs * dx + sn * dy + cx, -sn * dx + cs * dy + cy};
  });
}

}  // namespace augment_detail

}  // namespace imbassl

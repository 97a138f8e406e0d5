#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "imbassl/random.hpp"

namespace imbassl {

// Planar RGB image, values in [0,1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, double fill = 0.0);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }

  double& at(std::size_t channel, std::size_t x, std::size_t y) {
    return data_[(channel * height_ + y) * width_ + x];
  }
  double at(std::size_t channel, std::size_t x, std::size_t y) const {
    return data_[(channel * height_ + y) * width_ + x];
  }
  std::span<double> channel(std::size_t c) {
    return {data_.data() + c * pixel_count(), pixel_count()};
  }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * pixel_count(), pixel_count()};
  }
  const std::vector<double>& data() const { return data_; }

  double channel_mean(std::size_t c) const;
  void clamp();

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

enum class PerturbMode { kWeak, kStrong, kVector };

struct PerturbSpec {
  PerturbMode mode = PerturbMode::kWeak;
  double noise_sigma = 0.0;  // VECTOR mode only
  std::uint64_t rng_seed = 0;
};

// Scales red and blue so their means match the green channel's mean.
RgbImage color_normalize(const RgbImage& img);

// Flip, rotation in [0°,180°], random erasing of 2–33% of the area and
// brightness/contrast/saturation jitter in [0.9,1.1].
RgbImage weak_augment(const RgbImage& img, const PerturbSpec& spec);

// Weak pipeline with erasing up to 50%, jitter in [0.6,1.4] and one extra
// shear or translation of up to 20%.
RgbImage strong_augment(const RgbImage& img, const PerturbSpec& spec);

// x + N(0, noise_sigma²·I)
std::vector<double> perturb_vector(std::span<const double> x, const PerturbSpec& spec);

// Binary PPM (P6, maxval 255).
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const RgbImage& img, const std::filesystem::path& path);

namespace augment_detail {

struct Rect {
  std::size_t x = 0, y = 0, w = 0, h = 0;
  std::size_t area() const { return w * h; }
};

// Rectangle whose area fraction of a width×height image lies in [lo, hi].
Rect sample_erase_rect(std::size_t width, std::size_t height, double lo, double hi, Rng& rng);

RgbImage horizontal_flip(const RgbImage& img);
RgbImage rotate(const RgbImage& img, double degrees);

}  // namespace augment_detail

}  // namespace imbassl

#include "fpad/preproc.hpp"

#include <cmath>

#include "fpad/common.hpp"

namespace fpad {

GrayImage extract_roi(const GrayImage& img, float background_threshold) {
  if (!(background_threshold > 0.0f) || background_threshold > 1.0f)
    throw InvalidParams("background threshold must lie in (0,1]");
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  int top = h, bottom = -1, left = w, right = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (img(y, x) < background_threshold) {
        top = std::min(top, y);
        bottom = std::max(bottom, y);
        left = std::min(left, x);
        right = std::max(right, x);
      }
  if (bottom < 0) throw EmptyImage("no pixel below the background threshold");
  return img.block(top, left, bottom - top + 1, right - left + 1);
}

GrayImage pad_to_patch(const GrayImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  if (h >= kPatchSize && w >= kPatchSize) return img;
  const int nh = std::max(h, kPatchSize), nw = std::max(w, kPatchSize);
  GrayImage out = GrayImage::Constant(nh, nw, 1.0f);
  out.block((nh - h) / 2, (nw - w) / 2, h, w) = img;
  return out;
}

GrayImage augment(const GrayImage& img, const AugmentConfig& cfg, RngStream& rng) {
  if (cfg.flip_probability < 0.0 || cfg.flip_probability > 1.0)
    throw InvalidParams("flip probability must lie in [0,1]");
  if (cfg.rotation_min_deg > cfg.rotation_max_deg || cfg.brightness_min > cfg.brightness_max)
    throw InvalidParams("augmentation range has min > max");

  // Fixed draw order: flip coin, angle, brightness factor.
  const bool flip = rng.uniform() < cfg.flip_probability;
  const double angle_deg = rng.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
  const double factor = rng.uniform(cfg.brightness_min, cfg.brightness_max);

  GrayImage work = flip ? GrayImage(img.rowwise().reverse()) : img;

  const int h = static_cast<int>(work.rows()), w = static_cast<int>(work.cols());
  GrayImage rotated(h, w);
  if (angle_deg == 0.0) {
    rotated = work;
  } else {
    const double a = angle_deg * M_PI / 180.0;
    const double ca = std::cos(a), sa = std::sin(a);
    const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        // Inverse map: rotate destination coordinates back into the source.
        double dy = y - cy, dx = x - cx;
        double sy = cy + (sa * dx + ca * dy);
        double sx = cx + (ca * dx - sa * dy);
        if (sy < 0.0 || sx < 0.0 || sy > h - 1.0 || sx > w - 1.0) {
          rotated(y, x) = 1.0f;  // background fill
          continue;
        }
        int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
        int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
        double fy = sy - y0, fx = sx - x0;
        rotated(y, x) = static_cast<float>((1 - fy) * ((1 - fx) * work(y0, x0) + fx * work(y0, x1)) +
                                           fy * ((1 - fx) * work(y1, x0) + fx * work(y1, x1)));
      }
  }

  if (factor == 1.0) return rotated;
  return (rotated * static_cast<float>(factor)).cwiseMin(1.0f).cwiseMax(0.0f);
}

Patch random_crop(const GrayImage& img, RngStream& rng) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  if (h < kPatchSize || w < kPatchSize)
    throw TooSmall("image smaller than 64x64; pad with pad_to_patch first");
  const int oy = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(h - kPatchSize + 1)));
  const int ox = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(w - kPatchSize + 1)));
  Patch p(kPatchPixels);
  for (int y = 0; y < kPatchSize; ++y)
    for (int x = 0; x < kPatchSize; ++x)
      p[y * kPatchSize + x] = normalize_intensity(img(oy + y, ox + x));
  return p;
}

PatchBatch tile_patches(const GrayImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  if (h < kPatchSize || w < kPatchSize) throw TooSmall("image smaller than 64x64");
  const int ny = h / kPatchSize, nx = w / kPatchSize;
  PatchBatch out(kPatchPixels, ny * nx);
  for (int ty = 0; ty < ny; ++ty)
    for (int tx = 0; tx < nx; ++tx) {
      const int col = ty * nx + tx;
      for (int y = 0; y < kPatchSize; ++y)
        for (int x = 0; x < kPatchSize; ++x)
          out(y * kPatchSize + x, col) =
              normalize_intensity(img(ty * kPatchSize + y, tx * kPatchSize + x));
    }
  return out;
}

PatchBatch eval_patches(const GrayImage& img, float background_threshold) {
  return tile_patches(pad_to_patch(extract_roi(img, background_threshold)));
}

TrainStream::TrainStream(const DatasetIndex& index, const AugmentConfig& cfg, int batch_size,
                         std::uint64_t seed)
    : cfg_(cfg),
      batch_size_(batch_size),
      shuffle_rng_(RngStream(seed).split("shuffle")),
      sample_rng_(RngStream(seed).split("sample")) {
  if (batch_size < 1) throw InvalidParams("batch size must be >= 1");
  for (const auto& e : index.entries) {
    if (e.split != Split::train) continue;
    if (e.label != Label::bona_fide)
      throw InvalidParams("train split must contain bona fide entries only: " + e.path);
    items_.push_back({(index.root / e.path).string(), false, {}});
  }
  if (items_.empty()) throw InsufficientData("empty train split");
  order_.resize(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) order_[i] = i;
  shuffle_rng_.shuffle(order_);
}

const GrayImage& TrainStream::roi(std::size_t item) {
  Item& it = items_[item];
  if (!it.loaded) {
    it.roi = extract_roi(io::read_png_gray(it.path));
    it.loaded = true;
  }
  return it.roi;
}

PatchBatch TrainStream::next(std::vector<std::string>* paths) {
  PatchBatch batch(kPatchPixels, batch_size_);
  if (paths) paths->clear();
  for (int b = 0; b < batch_size_; ++b) {
    if (cursor_ == order_.size()) {
      shuffle_rng_.shuffle(order_);
      cursor_ = 0;
    }
    const std::size_t item = order_[cursor_++];
    if (paths) paths->push_back(items_[item].path);
    GrayImage aug = pad_to_patch(augment(roi(item), cfg_, sample_rng_));
    batch.col(b) = random_crop(aug, sample_rng_);
  }
  return batch;
}

}  // namespace fpad

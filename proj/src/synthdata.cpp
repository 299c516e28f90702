#include "fpad/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpad/common.hpp"
#include "fpad/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

std::string to_string(Label l) { return l == Label::bona_fide ? "bona_fide" : "pa"; }
std::string to_string(Split s) { return s == Split::train ? "train" : "val"; }

std::string to_string(AttackKindId k) {
  switch (k) {
    case AttackKindId::ridge_shift: return "ridge_shift";
    case AttackKindId::blob_occlusion: return "blob_occlusion";
    case AttackKindId::contrast_flatten: return "contrast_flatten";
    case AttackKindId::speckle_noise: return "speckle_noise";
  }
  throw InvalidParams("unknown attack kind");
}

AttackKindId attack_from_string(const std::string& s) {
  if (s == "ridge_shift") return AttackKindId::ridge_shift;
  if (s == "blob_occlusion") return AttackKindId::blob_occlusion;
  if (s == "contrast_flatten") return AttackKindId::contrast_flatten;
  if (s == "speckle_noise") return AttackKindId::speckle_noise;
  throw InvalidParams("unknown attack kind: " + s);
}

int DatasetIndex::count(Label l, Split s) const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(), [&](const DatasetEntry& e) {
    return e.label == l && e.split == s;
  }));
}

std::vector<fs::path> DatasetIndex::paths(Label l, Split s) const {
  std::vector<fs::path> out;
  for (const auto& e : entries)
    if (e.label == l && e.split == s) out.push_back(root / e.path);
  return out;
}

DatasetIndex DatasetIndex::subset(Split s) const {
  DatasetIndex out;
  out.root = root;
  for (const auto& e : entries)
    if (e.split == s) out.entries.push_back(e);
  return out;
}

void DatasetIndex::save_manifest() const {
  json j;
  j["entries"] = json::array();
  for (const auto& e : entries)
    j["entries"].push_back({{"path", e.path}, {"label", to_string(e.label)}, {"split", to_string(e.split)}});
  std::ofstream out(root / "index.json");
  if (!out) throw IoError("cannot write manifest: " + (root / "index.json").string());
  out << j.dump(2) << "\n";
}

DatasetIndex load_manifest(const fs::path& root) {
  std::ifstream in(root / "index.json");
  if (!in) throw IoError("cannot read manifest: " + (root / "index.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DecodeError("malformed manifest " + (root / "index.json").string() + ": " + e.what());
  }
  DatasetIndex idx;
  idx.root = root;
  for (const auto& e : j.at("entries")) {
    DatasetEntry entry;
    entry.path = e.at("path").get<std::string>();
    entry.label = e.at("label").get<std::string>() == "pa" ? Label::pa : Label::bona_fide;
    entry.split = e.at("split").get<std::string>() == "val" ? Split::val : Split::train;
    idx.entries.push_back(entry);
  }
  return idx;
}

namespace {

// Smooth scalar field as a sum of random low-frequency cosines. Gradient
// magnitude is bounded by `max_gradient` so the local ridge frequency stays
// close to the nominal one.
struct WarpField {
  struct Wave {
    double qx, qy, phase, amp;
  };
  std::vector<Wave> waves;

  static WarpField make(RngStream& rng, double smoothness, double max_gradient) {
    WarpField f;
    const int k = 6;
    const double per_wave = max_gradient / k;
    for (int i = 0; i < k; ++i) {
      double freq = rng.uniform(0.002, 0.008) / std::max(smoothness, 1e-3);
      double dir = rng.uniform(0.0, 2.0 * M_PI);
      Wave w;
      w.qx = freq * std::cos(dir);
      w.qy = freq * std::sin(dir);
      w.phase = rng.uniform(0.0, 2.0 * M_PI);
      // |grad| of amp*cos(2pi q.r) is 2*pi*amp*|q|
      w.amp = per_wave / (2.0 * M_PI * freq);
      f.waves.push_back(w);
    }
    return f;
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves) v += w.amp * std::cos(2.0 * M_PI * (w.qx * x + w.qy * y) + w.phase);
    return v;
  }
};

float bilinear_sample(const GrayImage& img, double y, double x, float fill) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  if (y < 0.0 || x < 0.0 || y > h - 1.0 || x > w - 1.0) return fill;
  int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
  int y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  double fy = y - y0, fx = x - x0;
  double v = (1 - fy) * ((1 - fx) * img(y0, x0) + fx * img(y0, x1)) +
             fy * ((1 - fx) * img(y1, x0) + fx * img(y1, x1));
  return static_cast<float>(v);
}

}  // namespace

GrayImage generate_bona_fide(const SynthParams& p) {
  if (!(p.ridge_frequency > 0.0) || !(p.ridge_frequency < 0.5))
    throw InvalidParams("ridge_frequency must lie in (0, 0.5)");
  if (p.height < 1 || p.width < 1) throw InvalidParams("image size must be positive");
  if (p.orientation_smoothness <= 0.0) throw InvalidParams("orientation_smoothness must be > 0");
  if (p.noise_level < 0.0 || p.noise_level > 1.0) throw InvalidParams("noise_level must be in [0,1]");

  RngStream rng(p.seed);
  const double theta0 = rng.uniform(0.0, M_PI);
  const double c0 = std::cos(theta0), s0 = std::sin(theta0);
  // Keep the warp gradient well below the nominal frequency so the dominant
  // spectral peak stays within +-0.02 cycles/px of ridge_frequency.
  WarpField warp = WarpField::make(rng, p.orientation_smoothness, 0.06);
  RngStream noise = rng.split("pixel_noise");

  const int h = p.height, w = p.width;
  const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
  const double margin = std::max(8.0, std::min(h, w) / 16.0);
  const double ry = 0.5 * h - margin, rx = 0.5 * w - margin;

  GrayImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double u = x * c0 + y * s0 + warp(x, y);
      double ridge = std::cos(2.0 * M_PI * p.ridge_frequency * u);
      double v = 0.5 + 0.5 * std::tanh(2.5 * ridge);  // soft-binarized ridges
      double ink = 0.15 + 0.70 * v;                   // valleys bright, ridges dark

      // Elliptic fingerprint support with a soft edge; outside is white.
      double dy = (y - cy) / ry, dx = (x - cx) / rx;
      double rho = std::sqrt(dy * dy + dx * dx);
      double m = std::clamp((1.0 - rho) / 0.08, 0.0, 1.0);

      double n = p.noise_level * 0.08 * noise.normal();
      double val = m * std::clamp(ink + n, 0.0, 1.0) + (1.0 - m) * 1.0;
      img(y, x) = static_cast<float>(std::clamp(val, 0.0, 1.0));
    }
  }
  return img;
}

GrayImage apply_attack(const GrayImage& img, const AttackKind& attack, std::uint64_t seed) {
  if (attack.magnitude <= 0.0 || attack.magnitude > 1.0)
    throw InvalidParams("attack magnitude must lie in (0,1]");
  RngStream rng(seed);
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  const double m = attack.magnitude;
  GrayImage out = img;

  switch (attack.kind) {
    case AttackKindId::ridge_shift: {
      // Resample about the center so the dominant frequency shifts by the
      // scale factor.
      const double scale = 1.0 / (1.0 + 0.6 * m);
      const double cy = 0.5 * (h - 1), cx = 0.5 * (w - 1);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out(y, x) = bilinear_sample(img, cy + (y - cy) * scale, cx + (x - cx) * scale, 1.0f);
      break;
    }
    case AttackKindId::blob_occlusion: {
      // Contiguous elliptic patch replaced with a flat smudge; area fraction
      // scales with magnitude (0.24*m of the frame).
      const double area = 0.24 * m * h * w;
      const double aspect = rng.uniform(0.6, 1.6);
      double ra = std::sqrt(area / M_PI * aspect);
      double rb = area / (M_PI * ra);
      double cy = rng.uniform(0.3, 0.7) * h;
      double cx = rng.uniform(0.3, 0.7) * w;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double dy = (y - cy) / rb, dx = (x - cx) / ra;
          if (dy * dy + dx * dx <= 1.0) out(y, x) = 0.2f;
        }
      break;
    }
    case AttackKindId::contrast_flatten: {
      out = 0.5f + (1.0f - static_cast<float>(m)) * (img - 0.5f);
      break;
    }
    case AttackKindId::speckle_noise: {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double n = 0.4 * m * (2.0 * rng.uniform() - 1.0);
          out(y, x) = static_cast<float>(std::clamp(img(y, x) + n, 0.0, 1.0));
        }
      break;
    }
  }
  return out.cwiseMax(0.0f).cwiseMin(1.0f);
}

DatasetIndex build_corpus(int n_bona_train, int n_bona_val, int n_pa_val, const SynthParams& params,
                          const std::vector<AttackKind>& attacks, std::uint64_t seed,
                          const fs::path& out_dir) {
  if (n_bona_train < 1 || n_bona_val < 1 || n_pa_val < 1)
    throw InvalidParams("corpus counts must be >= 1");
  if (attacks.empty()) throw InvalidParams("at least one attack kind required");

  std::error_code ec;
  for (const char* split : {"train", "val"})
    for (const char* label : {"bona_fide", "pa"}) {
      fs::create_directories(out_dir / split / label, ec);
      if (ec) throw IoError("cannot create " + (out_dir / split / label).string());
    }

  RngStream root(seed);
  DatasetIndex idx;
  idx.root = out_dir;

  auto emit = [&](Split split, Label label, int i, const GrayImage& img) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.png", label == Label::pa ? "pa" : "bona", i);
    fs::path rel = fs::path(to_string(split)) / to_string(label) / name;
    io::write_png_gray(out_dir / rel, img);
    idx.entries.push_back({rel.generic_string(), label, split});
  };

  RngStream tr = root.split("train_bona");
  for (int i = 0; i < n_bona_train; ++i) {
    SynthParams p = params;
    p.seed = tr.split(static_cast<std::uint64_t>(i)).next_u64();
    emit(Split::train, Label::bona_fide, i, generate_bona_fide(p));
  }
  RngStream vb = root.split("val_bona");
  for (int i = 0; i < n_bona_val; ++i) {
    SynthParams p = params;
    p.seed = vb.split(static_cast<std::uint64_t>(i)).next_u64();
    emit(Split::val, Label::bona_fide, i, generate_bona_fide(p));
  }
  RngStream vp = root.split("val_pa");
  for (int i = 0; i < n_pa_val; ++i) {
    RngStream si = vp.split(static_cast<std::uint64_t>(i));
    SynthParams p = params;
    p.seed = si.next_u64();
    GrayImage base = generate_bona_fide(p);
    const AttackKind& atk = attacks[static_cast<std::size_t>(i) % attacks.size()];
    emit(Split::val, Label::pa, i, apply_attack(base, atk, si.next_u64()));
  }

  idx.save_manifest();
  return idx;
}

DatasetIndex scan_dataset(const fs::path& root) {
  DatasetIndex idx;
  idx.root = root;
  for (Split split : {Split::train, Split::val}) {
    for (Label label : {Label::bona_fide, Label::pa}) {
      fs::path dir = root / to_string(split) / to_string(label);
      if (!fs::is_directory(dir))
        throw LayoutError("missing dataset subdirectory: " + dir.string());
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        io::read_png_gray(f);  // validates; DecodeError names the path
        idx.entries.push_back(
            {fs::relative(f, root).generic_string(), label, split});
      }
    }
  }
  return idx;
}

}  // namespace fpad

#include "fpad/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fpad/common.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

namespace detail {

std::vector<float> to_row_major(const nn::Mat<float>& m) {
  std::vector<float> out(static_cast<std::size_t>(m.size()));
  Eigen::Map<nn::Mat<float>>(out.data(), m.cols(), m.rows()) = m.transpose();
  return out;
}

void from_row_major(const std::vector<float>& v, nn::Mat<float>& m) {
  m = Eigen::Map<const nn::Mat<float>>(v.data(), m.cols(), m.rows()).transpose();
}

}  // namespace detail

void save_checkpoint(Network<float>& net, const fs::path& dir, const CheckpointMeta& meta) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create checkpoint directory: " + dir.string());

  json manifest;
  manifest["metadata"] = {{"kind", meta.kind},
                          {"loss_mode", meta.loss_mode},
                          {"variant", meta.variant},
                          {"base_channels", meta.base_channels},
                          {"seed", meta.seed},
                          {"epoch", meta.epoch}};
  manifest["tensors"] = json::array();

  for (auto& p : net.seq.params()) {
    manifest["tensors"].push_back(
        {{"name", p.name}, {"shape", p.shape.dims}, {"dtype", "float32"}});
    std::vector<float> values = detail::to_row_major(*p.value);
    std::ofstream out(dir / (p.name + ".bin"), std::ios::binary);
    if (!out) throw IoError("cannot write tensor blob: " + (dir / (p.name + ".bin")).string());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest: " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

RawCheckpoint load_raw_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("cannot read manifest: " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ManifestMismatch("malformed manifest in " + dir.string() + ": " + e.what());
  }

  RawCheckpoint ckpt;
  const auto& md = manifest.at("metadata");
  ckpt.meta.kind = md.at("kind").get<std::string>();
  ckpt.meta.loss_mode = md.at("loss_mode").get<std::string>();
  ckpt.meta.variant = md.value("variant", "transfer");
  ckpt.meta.base_channels = md.at("base_channels").get<int>();
  ckpt.meta.seed = md.at("seed").get<std::uint64_t>();
  ckpt.meta.epoch = md.at("epoch").get<int>();

  for (const auto& t : manifest.at("tensors")) {
    RawTensor raw;
    const auto name = t.at("name").get<std::string>();
    raw.shape = t.at("shape").get<std::vector<int>>();
    std::size_t count = 1;
    for (int d : raw.shape) count *= static_cast<std::size_t>(d);

    std::ifstream blob(dir / (name + ".bin"), std::ios::binary | std::ios::ate);
    if (!blob) throw IoError("missing tensor blob: " + (dir / (name + ".bin")).string());
    const auto bytes = static_cast<std::size_t>(blob.tellg());
    if (bytes != count * sizeof(float))
      throw ManifestMismatch("tensor '" + name + "': blob holds " + std::to_string(bytes) +
                             " bytes, manifest declares " + std::to_string(count * sizeof(float)));
    raw.values.resize(count);
    blob.seekg(0);
    blob.read(reinterpret_cast<char*>(raw.values.data()), static_cast<std::streamsize>(bytes));
    ckpt.order.push_back(name);
    ckpt.tensors.emplace(name, std::move(raw));
  }
  return ckpt;
}

void load_into(Network<float>& net, const RawCheckpoint& ckpt) {
  auto params = net.seq.params();
  if (params.size() != ckpt.tensors.size()) {
    // Name the first tensor present on one side only.
    for (const auto& p : params)
      if (!ckpt.tensors.count(p.name))
        throw ManifestMismatch("tensor '" + p.name + "' missing from checkpoint");
    for (const auto& name : ckpt.order) {
      bool found = false;
      for (const auto& p : params) found |= p.name == name;
      if (!found) throw ManifestMismatch("checkpoint tensor '" + name + "' has no target in net");
    }
  }
  for (auto& p : params) {
    auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end())
      throw ManifestMismatch("tensor '" + p.name + "' missing from checkpoint");
    if (it->second.shape != p.shape.dims)
      throw ManifestMismatch("tensor '" + p.name + "': shape mismatch between net and checkpoint");
    detail::from_row_major(it->second.values, *p.value);
  }
}

Network<float> load_checkpoint(const fs::path& dir) {
  RawCheckpoint ckpt = load_raw_checkpoint(dir);
  Network<float> net;
  const NetKind kind = net_kind_from_string(ckpt.meta.kind);
  const GanLossMode mode = loss_mode_from_string(ckpt.meta.loss_mode);
  switch (kind) {
    case NetKind::generator: net = build_generator<float>(ckpt.meta.base_channels); break;
    case NetKind::critic: net = build_critic<float>(mode, ckpt.meta.base_channels); break;
    case NetKind::autoencoder:
      net = build_autoencoder<float>(ae_variant_from_string(ckpt.meta.variant), mode,
                                     ckpt.meta.base_channels);
      break;
  }
  load_into(net, ckpt);
  return net;
}

}  // namespace fpad

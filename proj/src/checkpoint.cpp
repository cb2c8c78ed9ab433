// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint container:
//
//   "LSDFCKPT" | u32 version | u32 n | n bytes of JSON architecture
//   u64 encoder seed | f64 freq_scale | 32x3 f64 frequencies (row-major)
//   u32 block count | (u32 rows, u32 cols) per block
//   f64 block data, row-major, in manifest order
//
// All integers and floats are little-endian. Blocks alternate weight and
// bias per layer, first hidden layer first.

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

#include "lidarsdf/model.hpp"

namespace lidarsdf {
namespace {

constexpr char kMagic[8] = {'L', 'S', 'D', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::string path) : buf_(buf), path_(std::move(path)) {}

  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ValidationError(path_ + ": truncated checkpoint");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
  std::string path_;
};

nlohmann::json architecture_json(const MlpConfig& c) {
  return {{"hidden_layers", c.hidden_layers},
          {"hidden_width", c.hidden_width},
          {"activation", to_string(c.activation)},
          {"skip_connections", c.skip_connections},
          {"use_encoder", c.use_encoder},
          {"freq_scale", c.freq_scale},
          {"confidence_head", to_string(c.confidence_head)},
          {"seed", c.seed}};
}

MlpConfig architecture_from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  c.hidden_width = j.at("hidden_width").get<std::size_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.skip_connections = j.at("skip_connections").get<bool>();
  c.use_encoder = j.at("use_encoder").get<bool>();
  c.freq_scale = j.at("freq_scale").get<double>();
  c.confidence_head = parse_confidence_head(j.at("confidence_head").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> block_shapes(const MlpConfig& c) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
  const auto w = static_cast<std::uint32_t>(c.hidden_width);
  for (std::size_t l = 0; l <= c.hidden_layers; ++l) {
    const auto in = l == 0 ? static_cast<std::uint32_t>(c.input_dim()) : w;
    const std::uint32_t out = l == c.hidden_layers ? 2 : w;
    shapes.emplace_back(out, in);
    shapes.emplace_back(out, 1);
  }
  return shapes;
}

}  // namespace

void save_checkpoint(const SdfModel& model, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  const std::string arch = architecture_json(model.config()).dump();
  w.u32(static_cast<std::uint32_t>(arch.size()));
  w.bytes(arch.data(), arch.size());

  const FourierEncoder& enc = model.encoder();
  w.u64(enc.seed);
  w.f64(enc.freq_scale);
  for (int r = 0; r < FourierEncoder::kFrequencies; ++r)
    for (int c = 0; c < 3; ++c) w.f64(enc.frequencies(r, c));

  const auto& layers = model.layers();
  w.u32(static_cast<std::uint32_t>(2 * layers.size()));
  for (const auto& l : layers) {
    w.u32(static_cast<std::uint32_t>(l.weight.rows()));
    w.u32(static_cast<std::uint32_t>(l.weight.cols()));
    w.u32(static_cast<std::uint32_t>(l.bias.size()));
    w.u32(1);
  }
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.f64(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) w.f64(l.bias(r));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write checkpoint");
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw Error(path.string() + ": write failed");
}

SdfModel load_checkpoint(const std::filesystem::path& path, const std::optional<MlpConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string() + ": cannot open checkpoint");
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(buf, path.string());

  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw ValidationError(path.string() + ": not a lidarsdf checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw ValidationError(path.string() + ": checkpoint version " + std::to_string(version) + " is not supported");

  const std::uint32_t arch_len = r.u32();
  r.need(arch_len);
  MlpConfig config;
  try {
    config = architecture_from_json(nlohmann::json::parse(r.bytes(arch_len)));
    config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": corrupt architecture record (" + e.what() + ")");
  }

  FourierEncoder enc;
  enc.seed = r.u64();
  enc.freq_scale = r.f64();
  for (int row = 0; row < FourierEncoder::kFrequencies; ++row)
    for (int c = 0; c < 3; ++c) enc.frequencies(row, c) = r.f64();

  const auto shapes = block_shapes(config);
  const std::uint32_t blocks = r.u32();
  if (blocks != shapes.size()) throw ValidationError(path.string() + ": shape manifest disagrees with architecture");
  std::size_t values = 0;
  for (const auto& [rows, cols] : shapes) {
    const std::uint32_t mr = r.u32();
    const std::uint32_t mc = r.u32();
    if (mr != rows || mc != cols)
      throw ValidationError(path.string() + ": shape manifest disagrees with architecture");
    values += static_cast<std::size_t>(rows) * cols;
  }
  if (r.remaining() != values * 8) throw ValidationError(path.string() + ": truncated checkpoint");

  if (expected) {
    const auto want = block_shapes(*expected);
    if (want != shapes || expected->activation != config.activation ||
        expected->skip_connections != config.skip_connections)
      throw ValidationError(path.string() + ": checkpoint shape does not match the expected architecture");
  }

  ParameterSet layers;
  for (std::size_t l = 0; l <= config.hidden_layers; ++l) {
    const auto& ws = shapes[2 * l];
    DenseLayer layer{Eigen::MatrixXd(ws.first, ws.second), Eigen::VectorXd(ws.first)};
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.f64();
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias(row) = r.f64();
    layers.push_back(std::move(layer));
  }
  return SdfModel(config, enc, std::move(layers));
}

}  // namespace lidarsdf

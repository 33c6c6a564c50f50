#include "kml/model_io.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "kml/error.hpp"

namespace kml::io {
namespace {

constexpr std::uint8_t kMagic[4] = {'K', 'M', 'L', 'M'};
constexpr std::size_t kHeaderSize = 13;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    auto b = take(4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t remaining() const { return bytes_.size() - at_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (remaining() < n) throw CorruptionError("model file truncated at byte " + std::to_string(at_));
    auto s = bytes_.subspan(at_, n);
    at_ += n;
    return s;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t at_ = 0;
};

void encode_network(Writer& w, const Network& net) {
  w.u16(static_cast<std::uint16_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    if (const auto* fc = std::get_if<nn::FullyConnectedLayer<float>>(&layer)) {
      w.u8(static_cast<std::uint8_t>(nn::LayerKind::fully_connected));
      w.u32(static_cast<std::uint32_t>(fc->in_size()));
      w.u32(static_cast<std::uint32_t>(fc->out_size()));
      for (Eigen::Index r = 0; r < fc->weights.rows(); ++r)
        for (Eigen::Index c = 0; c < fc->weights.cols(); ++c) w.f32(fc->weights(r, c));
      for (Eigen::Index r = 0; r < fc->bias.rows(); ++r) w.f32(fc->bias(r, 0));
    } else {
      const auto& act = std::get<nn::ActivationLayer<float>>(layer);
      w.u8(static_cast<std::uint8_t>(act.kind));
      w.u32(static_cast<std::uint32_t>(act.width()));
      w.u32(static_cast<std::uint32_t>(act.width()));
    }
  }
}

void encode_tree(Writer& w, const dtree::DecisionTree& tree) {
  w.u32(static_cast<std::uint32_t>(tree.node_count()));
  for (const auto& node : tree.nodes()) {
    w.u8(node.leaf ? 1 : 0);
    if (node.leaf) {
      w.u16(node.label);
    } else {
      w.u16(node.feature);
      w.f32(node.threshold);
    }
  }
}

Network decode_network(Reader& r) {
  const std::uint16_t count = r.u16();
  if (count == 0) throw CorruptionError("network has no layers");
  Network net;
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::uint8_t kind = r.u8();
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    if (kind == static_cast<std::uint8_t>(nn::LayerKind::fully_connected)) {
      if (in == 0 || out == 0) throw CorruptionError("layer " + std::to_string(i) + " has a zero dimension");
      // Guard the allocation against sizes the remaining bytes cannot hold.
      if (static_cast<std::uint64_t>(in) * out + out > r.remaining() / 4) {
        throw CorruptionError("layer " + std::to_string(i) + " parameters exceed file size");
      }
      Matrix weights(out, in);
      Matrix bias(out, 1);
      for (Eigen::Index row = 0; row < weights.rows(); ++row)
        for (Eigen::Index col = 0; col < weights.cols(); ++col) weights(row, col) = r.f32();
      for (Eigen::Index row = 0; row < bias.rows(); ++row) bias(row, 0) = r.f32();
      try {
        net.add_fully_connected(std::move(weights), std::move(bias));
      } catch (const ShapeError& e) {
        throw CorruptionError(std::string("layer chain does not compose: ") + e.what());
      }
    } else if (kind == static_cast<std::uint8_t>(nn::LayerKind::sigmoid) ||
               kind == static_cast<std::uint8_t>(nn::LayerKind::relu)) {
      if (in != out || net.empty() || net.output_size() != in) {
        throw CorruptionError("activation layer " + std::to_string(i) + " does not compose");
      }
      net.add_activation(static_cast<nn::LayerKind>(kind));
    } else {
      throw FormatError("unknown layer kind " + std::to_string(kind));
    }
  }
  return net;
}

dtree::DecisionTree decode_tree(Reader& r, std::size_t features, std::size_t classes) {
  const std::uint32_t count = r.u32();
  if (count == 0) throw CorruptionError("tree has no nodes");
  if (count > r.remaining() / 3) throw CorruptionError("tree node count exceeds file size");
  std::vector<dtree::TreeNode> nodes(count);
  // Right-child links are implied by pre-order; rebuild them with a stack of
  // split nodes still waiting for their right subtree.
  std::vector<std::uint32_t> open;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (i > 0) {
      if (nodes[i - 1].leaf) {
        if (open.empty()) throw CorruptionError("tree records continue past a complete tree");
        nodes[open.back()].right = i;
        open.pop_back();
      }
    }
    const std::uint8_t kind = r.u8();
    auto& node = nodes[i];
    if (kind == 1) {
      node.leaf = true;
      node.label = r.u16();
    } else if (kind == 0) {
      node.leaf = false;
      node.feature = r.u16();
      node.threshold = r.f32();
      open.push_back(i);
    } else {
      throw FormatError("unknown tree record kind " + std::to_string(kind));
    }
  }
  if (!open.empty() || !nodes.back().leaf) throw CorruptionError("tree records end mid-tree");
  try {
    return dtree::DecisionTree(std::move(nodes), features, classes);
  } catch (const ArgumentError& e) {
    throw CorruptionError(std::string("invalid tree: ") + e.what());
  }
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t at = 0;
  while (at < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - at, 1u << 30));
    crc = ::crc32(crc, bytes.data() + at, chunk);
    at += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode(const ModelBundle& model) {
  Writer w;
  for (std::uint8_t b : kMagic) w.u8(b);
  w.u8(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.kind()));
  w.u16(static_cast<std::uint16_t>(model.class_count()));
  w.u8(static_cast<std::uint8_t>(model.schema()));
  const auto& norm = model.normalizer();
  w.u32(static_cast<std::uint32_t>(norm.size()));
  for (std::size_t i = 0; i < norm.size(); ++i) {
    w.f32(norm.snapshot_mean(i));
    w.f32(norm.snapshot_variance(i));
  }
  if (model.kind() == ModelKind::nn) {
    encode_network(w, model.network());
  } else {
    encode_tree(w, model.tree());
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

ModelBundle decode(std::span<const std::uint8_t> bytes, std::optional<ModelKind> expected) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) throw FormatError("bad magic; not a model file");
  if (bytes.size() < 5) throw CorruptionError("model file truncated inside the header");
  if (bytes[4] != kFormatVersion) {
    throw VersionError("unsupported format version " + std::to_string(bytes[4]) + " (expected " +
                       std::to_string(kFormatVersion) + ")");
  }
  if (bytes.size() < kHeaderSize + 4) throw CorruptionError("model file truncated inside the header");
  const auto body = bytes.first(bytes.size() - 4);
  Reader tail(bytes.last(4));
  if (crc32(body) != tail.u32()) throw CorruptionError("checksum mismatch");

  Reader r(body);
  for (int i = 0; i < 5; ++i) r.u8();
  const std::uint8_t kind_byte = r.u8();
  if (kind_byte > static_cast<std::uint8_t>(ModelKind::dtree)) {
    throw ModelKindError("unknown model kind " + std::to_string(kind_byte));
  }
  const auto kind = static_cast<ModelKind>(kind_byte);
  if (expected && *expected != kind) {
    throw ModelKindError(std::string("expected a ") + to_string(*expected) + " model, file holds " + to_string(kind));
  }
  const std::uint16_t classes = r.u16();
  const std::uint8_t schema_byte = r.u8();
  if (schema_byte != 0 && schema_byte != 1 && schema_byte != 255) {
    throw FormatError("unknown feature schema tag " + std::to_string(schema_byte));
  }
  const auto schema = static_cast<FeatureSchema>(schema_byte);
  const std::uint32_t features = r.u32();
  if (features == 0 || features > r.remaining() / 8) throw CorruptionError("feature count exceeds file size");
  std::vector<float> mean(features), variance(features);
  for (std::uint32_t i = 0; i < features; ++i) {
    mean[i] = r.f32();
    variance[i] = r.f32();
  }
  pipeline::NormalizerState normalizer;
  try {
    normalizer = pipeline::NormalizerState::from_snapshot(mean, variance);
  } catch (const Error& e) {
    throw CorruptionError(std::string("normalizer: ") + e.what());
  }

  auto finish = [&](auto model) {
    if (r.remaining() != 0) throw CorruptionError("trailing bytes after model body");
    return model;
  };
  if (kind == ModelKind::nn) {
    Network net = decode_network(r);
    if (net.class_count() != classes || net.input_size() != features) {
      throw CorruptionError("network shape disagrees with the header");
    }
    return finish(ModelBundle(std::move(net), std::move(normalizer), schema));
  }
  auto tree = decode_tree(r, features, classes);
  return finish(ModelBundle(std::move(tree), std::move(normalizer), schema));
}

void save_model(const ModelBundle& model, const std::filesystem::path& path) {
  const auto bytes = encode(model);
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::string tmpl = (dir / (path.filename().string() + ".tmp-XXXXXX")).string();
  const int fd = ::mkstemp(tmpl.data());
  if (fd < 0) throw IoError("cannot create temporary file for " + path.string() + ": " + std::strerror(errno));
  auto fail = [&](const char* what) {
    const int err = errno;
    ::close(fd);
    ::unlink(tmpl.c_str());
    throw IoError(std::string(what) + " " + path.string() + ": " + std::strerror(err));
  };
  std::size_t written = 0;
  while (written < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + written, bytes.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("write failed for");
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) fail("fsync failed for");
  if (::close(fd) != 0) {
    const int err = errno;
    ::unlink(tmpl.c_str());
    throw IoError("close failed for " + path.string() + ": " + std::strerror(err));
  }
  if (::rename(tmpl.c_str(), path.c_str()) != 0) {
    const int err = errno;
    ::unlink(tmpl.c_str());
    throw IoError("rename failed for " + path.string() + ": " + std::strerror(err));
  }
}

ModelBundle load_model(const std::filesystem::path& path, std::optional<ModelKind> expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes, expected);
}

}  // namespace kml::io

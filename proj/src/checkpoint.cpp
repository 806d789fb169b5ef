// SPDX-License-Identifier: Apache-2.0
// Checkpoint layout (all integers and doubles little-endian):
//   "LTLABCKP" | u32 version | u8 'L'
//   str method
//   backbone: u64 input_dim | u8 frozen | u32 layers | per layer: matrix, vec
//   stats:    u64 C | C x u64 counts | C x i32 bins | C x i32 groups
//   heads:    u32 n | per head: matrix, vec | u32 m | m x i32 head_groups
//   layout:   u8 present | u32 limits | (f64 low, f64 high)... | u8 has_g0
//             | i32 background (-1 none) | C x i32 class_group
//   log:      u64 n | (f64 loss, f64 lr)...
// matrix = u64 rows | u64 cols | rows*cols f64 row-major; vec = u64 n | n f64
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "ltlab/error.hpp"
#include "ltlab/model.hpp"

namespace ltlab {
namespace {

constexpr std::array<char, 8> kMagic{'L', 'T', 'L', 'A', 'B', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void vec(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void matrix(const Matrix& m) {
    u64(m.rows());
    u64(m.cols());
    for (double x : m.values()) f64(x);
  }

 private:
  void le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(buf, bytes);
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<double> vec() {
    const auto n = count(u64());
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  Matrix matrix() {
    const auto rows = count(u64());
    const auto cols = count(u64());
    if (cols != 0 && rows > (std::size_t{1} << 32) / cols) {
      fail(ErrorCode::Parse, "checkpoint: matrix too large");
    }
    Matrix m(rows, cols);
    for (auto& x : m.values()) x = f64();
    return m;
  }
  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(ErrorCode::Parse, "checkpoint: truncated");
  }

 private:
  static std::size_t count(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 32)) fail(ErrorCode::Parse, "checkpoint: implausible size");
    return static_cast<std::size_t>(n);
  }
  std::uint64_t le(int n) {
    unsigned char buf[8];
    bytes(reinterpret_cast<char*>(buf), static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
  }
  std::istream& in_;
};

}  // namespace

void write_model(std::ostream& out, const TrainedModel& model) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.u32(kVersion);
  w.u8('L');
  w.str(to_string(model.method));

  w.u64(model.backbone.input_dim());
  w.u8(model.backbone.frozen() ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(model.backbone.layers().size()));
  for (const auto& layer : model.backbone.layers()) {
    w.matrix(layer.weight);
    w.vec(layer.bias);
  }

  const auto c = model.stats.num_classes();
  w.u64(c);
  for (auto n : model.stats.counts) w.u64(n);
  for (int b : model.stats.bins) w.i32(b);
  for (int g : model.stats.groups) w.i32(g);

  w.u32(static_cast<std::uint32_t>(model.heads.size()));
  for (const auto& head : model.heads) {
    w.matrix(head.weight);
    w.vec(head.bias);
  }
  w.u32(static_cast<std::uint32_t>(model.head_groups.size()));
  for (int g : model.head_groups) w.i32(g);

  w.u8(model.layout ? 1 : 0);
  if (model.layout) {
    const auto& layout = *model.layout;
    w.u32(static_cast<std::uint32_t>(layout.limits.size()));
    for (const auto& lim : layout.limits) {
      w.f64(lim.low);
      w.f64(lim.high);
    }
    w.u8(layout.has_background_group ? 1 : 0);
    w.i32(layout.background_class.value_or(-1));
    require(layout.class_group.size() == c, "checkpoint: layout/class count mismatch");
    for (int g : layout.class_group) w.i32(g);
  }

  w.u64(model.log.size());
  for (const auto& e : model.log) {
    w.f64(e.mean_loss);
    w.f64(e.lr);
  }
  if (!out) fail(ErrorCode::Io, "checkpoint: write failed");
}

TrainedModel read_model(std::istream& in) {
  Reader r(in);
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) fail(ErrorCode::Parse, "checkpoint: bad magic");
  if (const auto v = r.u32(); v != kVersion) {
    fail(ErrorCode::Parse, "checkpoint: unsupported version " + std::to_string(v));
  }
  if (r.u8() != 'L') fail(ErrorCode::Parse, "checkpoint: unsupported byte order");

  TrainedModel model;
  model.method = parse_method(r.str());

  const auto input_dim = r.u64();
  const bool frozen = r.u8() != 0;
  const auto n_layers = r.u32();
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    layer.weight = r.matrix();
    layer.bias = r.vec();
    layers.push_back(std::move(layer));
  }
  model.backbone = Backbone(static_cast<std::size_t>(input_dim), std::move(layers));
  model.backbone.set_frozen(frozen);

  const auto c = static_cast<std::size_t>(r.u64());
  if (c == 0 || c > (1u << 24)) fail(ErrorCode::Parse, "checkpoint: implausible class count");
  model.stats.counts.resize(c);
  model.stats.bins.resize(c);
  model.stats.groups.resize(c);
  for (auto& n : model.stats.counts) n = static_cast<std::size_t>(r.u64());
  for (auto& b : model.stats.bins) b = r.i32();
  for (auto& g : model.stats.groups) g = r.i32();

  const auto n_heads = r.u32();
  for (std::uint32_t h = 0; h < n_heads; ++h) {
    ClassifierHead head;
    head.weight = r.matrix();
    head.bias = r.vec();
    if (head.bias.size() != head.weight.rows()) fail(ErrorCode::Parse, "checkpoint: bad head");
    model.heads.push_back(std::move(head));
  }
  const auto n_groups = r.u32();
  for (std::uint32_t g = 0; g < n_groups; ++g) model.head_groups.push_back(r.i32());

  if (r.u8() != 0) {
    GroupLayout layout;
    const auto n_limits = r.u32();
    if (n_limits == 0 || n_limits > 64) fail(ErrorCode::Parse, "checkpoint: bad group limits");
    for (std::uint32_t k = 0; k < n_limits; ++k) {
      const double lo = r.f64();
      const double hi = r.f64();
      layout.limits.push_back({lo, hi});
    }
    layout.has_background_group = r.u8() != 0;
    if (const auto bg = r.i32(); bg >= 0) layout.background_class = bg;
    layout.class_group.resize(c);
    layout.members.resize(layout.limits.size() + 1);
    for (std::size_t j = 0; j < c; ++j) {
      const int g = r.i32();
      if (g < 0 || static_cast<std::size_t>(g) > layout.limits.size()) {
        fail(ErrorCode::Parse, "checkpoint: bad class group");
      }
      layout.class_group[j] = g;
      layout.members[static_cast<std::size_t>(g)].push_back(static_cast<int>(j));
    }
    model.layout = std::move(layout);
  }

  const auto n_log = r.u64();
  if (n_log > (1u << 24)) fail(ErrorCode::Parse, "checkpoint: implausible log length");
  for (std::uint64_t e = 0; e < n_log; ++e) {
    const double loss = r.f64();
    const double lr = r.f64();
    model.log.push_back({loss, lr});
  }
  return model;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint " + path.string());
  write_model(out, model);
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
  return read_model(in);
}

}  // namespace ltlab

#include "tio/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "tio/errors.hpp"

namespace tio {

namespace {

constexpr char kMagic[8] = {'T', 'I', 'O', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kFlagProjection = 1u << 0;
constexpr std::uint32_t kFlagIdentity = 1u << 1;

class Writer {
 public:
  void u32(std::uint32_t x) {
    for (int b = 0; b < 4; ++b) out_.push_back(static_cast<std::uint8_t>((x >> (8 * b)) & 0xffu));
  }
  void f64(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out_.push_back(static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffu));
  }
  void raw(const char* data, std::size_t n) { out_.insert(out_.end(), data, data + n); }

  void block(const std::string& name, const Matrix& m) {
    u32(static_cast<std::uint32_t>(name.size()));
    raw(name.data(), name.size());
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
    }
  }
  void scalar(const std::string& name, double x) { block(name, Matrix::Constant(1, 1, x)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int b = 0; b < 4; ++b) x |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * b);
    return x;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * b);
    return std::bit_cast<double>(bits);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(in_.begin() + static_cast<std::ptrdiff_t>(pos_), in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

  Matrix block(const std::string& expected, std::uint32_t rows, std::uint32_t cols) {
    const std::string name = str(u32());
    if (name != expected) fail("expected block '" + expected + "', found '" + name + "'");
    const std::uint32_t r = u32();
    const std::uint32_t c = u32();
    if (r != rows || c != cols) {
      fail("block '" + name + "' is " + std::to_string(r) + "x" + std::to_string(c) + ", expected " +
           std::to_string(rows) + "x" + std::to_string(cols));
    }
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = f64();
    }
    return m;
  }
  double scalar(const std::string& expected) { return block(expected, 1, 1)(0, 0); }

  bool at_end() const { return pos_ == in_.size(); }

  [[noreturn]] static void fail(const std::string& msg) { throw Error(ErrorCode::MalformedCheckpoint, msg); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) fail("truncated checkpoint");
  }

  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Model& model) {
  validate(model);
  const auto d = static_cast<std::uint32_t>(model.dim());
  const auto& enc = model.temporal;
  std::uint32_t flags = 0;
  if (model.gat.projection) flags |= kFlagProjection;
  if (model.gat.activation == Activation::Identity) flags |= kFlagIdentity;

  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(d);
  w.u32(static_cast<std::uint32_t>(enc.hidden()));
  w.u32(static_cast<std::uint32_t>(model.num_classes()));
  w.u32(flags);
  w.u32(model.gat.projection ? 15u : 14u);

  w.scalar("gat.sigma_kernel", model.gat.sigma_kernel);
  if (model.gat.projection) w.block("gat.projection", *model.gat.projection);
  w.scalar("temporal.sigma_time", enc.sigma_time);
  w.scalar("temporal.ln1.eps", enc.ln1.eps);
  w.scalar("temporal.ln2.eps", enc.ln2.eps);
  w.block("temporal.ffn.w1", enc.ffn.w1);
  w.block("temporal.ffn.b1", enc.ffn.b1);
  w.block("temporal.ffn.w2", enc.ffn.w2);
  w.block("temporal.ffn.b2", enc.ffn.b2);
  w.block("temporal.ln1.gain", enc.ln1.gain);
  w.block("temporal.ln1.bias", enc.ln1.bias);
  w.block("temporal.ln2.gain", enc.ln2.gain);
  w.block("temporal.ln2.bias", enc.ln2.bias);
  w.block("classifier.weight", model.classifier.weight);
  w.block("classifier.bias", model.classifier.bias);
  return w.take();
}

Model deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) Reader::fail("bad magic");
  if (const auto version = r.u32(); version != kCheckpointVersion) {
    Reader::fail("unsupported version " + std::to_string(version));
  }
  const std::uint32_t d = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t classes = r.u32();
  const std::uint32_t flags = r.u32();
  if (d == 0 || hidden == 0 || classes < 2) Reader::fail("invalid dimensions in header");
  if ((flags & ~(kFlagProjection | kFlagIdentity)) != 0) Reader::fail("unknown flag bits");
  const bool has_projection = (flags & kFlagProjection) != 0;
  if (r.u32() != (has_projection ? 15u : 14u)) Reader::fail("unexpected block count");

  Model model;
  model.gat.sigma_kernel = r.scalar("gat.sigma_kernel");
  if (has_projection) model.gat.projection = r.block("gat.projection", d, d);
  model.gat.activation = (flags & kFlagIdentity) != 0 ? Activation::Identity : Activation::ReLU;
  auto& enc = model.temporal;
  enc.sigma_time = r.scalar("temporal.sigma_time");
  enc.ln1.eps = r.scalar("temporal.ln1.eps");
  enc.ln2.eps = r.scalar("temporal.ln2.eps");
  enc.ffn.w1 = r.block("temporal.ffn.w1", d, hidden);
  enc.ffn.b1 = r.block("temporal.ffn.b1", hidden, 1);
  enc.ffn.w2 = r.block("temporal.ffn.w2", hidden, d);
  enc.ffn.b2 = r.block("temporal.ffn.b2", d, 1);
  enc.ln1.gain = r.block("temporal.ln1.gain", d, 1);
  enc.ln1.bias = r.block("temporal.ln1.bias", d, 1);
  enc.ln2.gain = r.block("temporal.ln2.gain", d, 1);
  enc.ln2.bias = r.block("temporal.ln2.bias", d, 1);
  model.classifier.weight = r.block("classifier.weight", classes, d);
  model.classifier.bias = r.block("classifier.bias", classes, 1);
  if (!r.at_end()) Reader::fail("trailing bytes after the last block");

  try {
    validate(model);
  } catch (const Error& e) {
    Reader::fail(e.what());
  }
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace tio

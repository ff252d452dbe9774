#include "amoc/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "amoc/error.hpp"

namespace amoc {
namespace {

constexpr char kMagic[8] = {'A', 'M', 'O', 'C', 'L', 'S', 'T', 'K'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  std::vector<std::uint8_t> take() && { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n) throw FormatError(std::string("model file truncated while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8, "tensor data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const LayerStackModel& model) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kModelFormatVersion);
  const auto& dims = model.dims();
  w.u32(dims.vocab_size);
  w.u32(dims.width);
  w.u32(dims.n_classes);
  w.u32(dims.depth);
  w.u32(static_cast<std::uint32_t>(model.depth()));
  for (auto layer : model.active_layers()) w.u32(layer);
  w.u32(static_cast<std::uint32_t>(model.tensor_count()));
  for (std::size_t i = 0; i < model.tensor_count(); ++i) {
    const auto& t = model.tensor(i);
    w.u32(static_cast<std::uint32_t>(t.rows));
    w.u32(static_cast<std::uint32_t>(t.cols));
    for (double v : t.data) w.f64(v);
  }
  const auto& mask = model.freeze_mask();
  w.u32(static_cast<std::uint32_t>(mask.size()));
  std::vector<std::uint8_t> bits((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  w.bytes(bits.data(), bits.size());
  return std::move(w).take();
}

LayerStackModel deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(sizeof(kMagic), "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) throw FormatError("not a model file (bad magic)");
  const auto version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw FormatError("model format version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  }
  ModelDims dims;
  dims.vocab_size = r.u32("dims");
  dims.width = r.u32("dims");
  dims.n_classes = r.u32("dims");
  dims.depth = r.u32("dims");
  const auto n_active = r.u32("active layer count");
  if (n_active == 0 || n_active > dims.depth) throw FormatError("invalid active layer count");
  std::vector<std::uint32_t> active(n_active);
  for (auto& layer : active) layer = r.u32("active layers");

  std::optional<LayerStackModel> model;
  try {
    model.emplace(dims, std::move(active));
  } catch (const InputError& e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }
  const auto n_tensors = r.u32("tensor count");
  if (n_tensors != model->tensor_count()) throw FormatError("tensor count does not match dims");
  for (std::size_t i = 0; i < n_tensors; ++i) {
    auto& t = model->tensor(i);
    const auto rows = r.u32("tensor shape");
    const auto cols = r.u32("tensor shape");
    if (rows != t.rows || cols != t.cols) throw FormatError("tensor " + model->tensor_name(i) + " has wrong shape");
    r.need(t.size() * 8, "tensor data");
    for (double& v : t.data) v = r.f64();
  }
  const auto n_bits = r.u32("freeze mask");
  if (n_bits != model->tensor_count()) throw FormatError("freeze mask size does not match tensor count");
  const auto bits = r.take((n_bits + 7) / 8, "freeze mask");
  for (std::size_t i = 0; i < n_bits; ++i) model->set_frozen(i, (bits[i / 8] >> (i % 8)) & 1u);
  if (!r.done()) throw FormatError("trailing bytes after model data");
  return std::move(*model);
}

void save_model(const std::filesystem::path& path, const LayerStackModel& model) {
  const auto bytes = serialize(model);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing model file " + path.string());
}

LayerStackModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace amoc

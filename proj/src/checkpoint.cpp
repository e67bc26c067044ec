#include "akd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "akd/error.hpp"

namespace akd {

namespace {

constexpr char kMagic[4] = {'A', 'K', 'D', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint64_t take(int width) {
    if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  double f64() { return std::bit_cast<double>(take(8)); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const MlpModel& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (const DenseLayer& layer : model.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
    put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
    for (double v : layer.weight.value.data()) put_f64(out, v);
    for (double v : layer.bias.value.data()) put_f64(out, v);
  }
  return out;
}

MlpModel decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not an AKD1 checkpoint");
  }
  Reader in(bytes);
  in.u32();
  const std::uint32_t layers = in.u32();
  if (layers == 0) throw ParseError("checkpoint has no layers");
  std::vector<DenseLayer> out;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    Matrix w(rows, cols);
    for (double& v : w.data()) v = in.f64();
    Matrix b(1, cols);
    for (double& v : b.data()) v = in.f64();
    out.push_back({Tensor(std::move(w)), Tensor(std::move(b))});
  }
  if (!in.done()) throw ParseError("checkpoint has trailing bytes");
  try {
    return MlpModel(std::move(out));
  } catch (const ShapeError& e) {
    throw ParseError(std::string("checkpoint layers inconsistent: ") + e.what());
  }
}

void save_checkpoint(const MlpModel& model, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(model);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("failed writing checkpoint " + path.string());
}

MlpModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace akd

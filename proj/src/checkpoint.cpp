#include "gsc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "gsc/errors.hpp"

namespace gsc {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U u;
  std::memcpy(&u, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, &u, sizeof(T));
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor>& tensors) {
  std::string out = "GSC1";
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    if (nt.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw CheckpointError("tensor name too long: " + nt.name.substr(0, 32));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(nt.name.size()));
    out += nt.name;
    const auto& shape = nt.tensor.shape();
    if (shape.size() > std::numeric_limits<std::uint8_t>::max()) throw CheckpointError("rank too large: " + nt.name);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : nt.tensor.values()) put_le<double>(out, v);
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.take(4) != "GSC1") throw CheckpointError("bad checkpoint magic");
  const auto count = r.get<std::uint32_t>();
  std::vector<NamedTensor> out;
  for (std::uint32_t t = 0; t < count; ++t) {
    NamedTensor nt;
    nt.name = r.take(r.get<std::uint16_t>());
    const auto rank = r.get<std::uint8_t>();
    if (rank == 0) throw CheckpointError("tensor " + nt.name + " has rank 0");
    ad::Shape shape(rank);
    for (auto& d : shape) {
      d = r.get<std::uint32_t>();
      if (d == 0) throw CheckpointError("tensor " + nt.name + " has a zero dimension");
    }
    std::vector<double> values(ad::shape_numel(shape));
    for (double& v : values) v = r.get<double>();
    nt.tensor = ad::Tensor::parameter(std::move(shape), std::move(values));
    out.push_back(std::move(nt));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const std::string bytes = encode_checkpoint(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("write failed: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace gsc

#include "aed/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aed {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(Errc::corrupt_archive, "tensor archive is truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const nn::Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::string TensorArchive::serialize() const {
  std::string out(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (auto d : tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

TensorArchive TensorArchive::parse(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(4) != std::string(kMagic, 4)) throw Error(Errc::corrupt_archive, "not a tensor archive (bad magic)");
  const auto version = in.u8();
  if (version != kVersion) throw Error(Errc::corrupt_archive, "unsupported archive version " + std::to_string(version));

  TensorArchive archive;
  const auto count = in.u32();
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name = in.take(in.u32());
    nn::Tensor t;
    const auto rank = in.u32();
    if (rank > 8) throw Error(Errc::corrupt_archive, "implausible tensor rank for '" + name + "'");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(in.u32());
      n *= t.shape.back();
    }
    if (n > bytes.size()) throw Error(Errc::corrupt_archive, "tensor '" + name + "' exceeds the archive");
    t.values.resize(n);
    for (auto& v : t.values) v = std::bit_cast<float>(in.u32());
    archive.entries.emplace_back(std::move(name), std::move(t));
  }
  if (!in.done()) throw Error(Errc::corrupt_archive, "trailing bytes after the last tensor");
  return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  const auto bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace aed

#ifndef SIGGAN_CHECKPOINT_HPP
#define SIGGAN_CHECKPOINT_HPP

// Binary checkpoint container. All integers and floats are little-endian.
//
//   magic        8 bytes  "SIGGANCK"
//   version      u32 length + UTF-8 text
//   config       u64 length + key = value text
//   stats        5 x f64  mean, std, delta, mu, sigma
//   2 sections   generator then discriminator:
//     u32 parameter count, then per parameter
//       u32 name length + name, u32 rank, u64 dims[rank], u64 count, f64 values[count]

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "siggan/config.hpp"
#include "siggan/error.hpp"
#include "siggan/io.hpp"
#include "siggan/model.hpp"
#include "siggan/preprocess.hpp"

namespace siggan {

inline constexpr std::string_view kCheckpointMagic = "SIGGANCK";
inline constexpr std::string_view kCheckpointVersion = "siggan-checkpoint/1";

struct Checkpoint {
  std::string version{kCheckpointVersion};
  PreprocessStats stats;
  SigGan model;

  const SigGanConfig& config() const { return model.config; }
};

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) {
      throw ParseError(std::string("checkpoint truncated while reading ") + what, pos_);
    }
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void write_section(std::string& out, const Network& net) {
  const auto params = net.parameters();
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.rows()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.cols()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) put_le<double>(out, p->value.data()[i]);
  }
}

inline void read_section(ByteReader& in, Network& net, const char* which) {
  const std::size_t count_at = in.offset();
  const auto count = in.get<std::uint32_t>("parameter count");
  auto params = net.parameters();
  if (count != params.size()) {
    throw VersionError(std::string(which) + ": checkpoint holds " + std::to_string(count) +
                       " parameters but the configured network has " +
                       std::to_string(params.size()) + " (offset " + std::to_string(count_at) + ")");
  }
  for (Parameter* p : params) {
    const auto name_len = in.get<std::uint32_t>("parameter name length");
    const std::string name(in.bytes(name_len, "parameter name"));
    const std::size_t shape_at = in.offset();
    const auto rank = in.get<std::uint32_t>("parameter rank");
    if (rank != 2) throw ParseError("parameter '" + name + "' has unsupported rank", shape_at);
    const auto rows = in.get<std::uint64_t>("parameter shape");
    const auto cols = in.get<std::uint64_t>("parameter shape");
    const std::size_t count_pos = in.offset();
    const auto n = in.get<std::uint64_t>("value count");
    if (n != rows * cols) throw ParseError("parameter '" + name + "' value count mismatch", count_pos);
    if (name != p->name || static_cast<Eigen::Index>(rows) != p->value.rows() ||
        static_cast<Eigen::Index>(cols) != p->value.cols()) {
      throw VersionError(std::string(which) + ": parameter '" + name + "' does not match '" +
                         p->name + "' " + shape_string(p->value) + " of the configured network");
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] = in.get<double>("parameter values");
    }
    p->zero_grad();
  }
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  std::string out;
  out += kCheckpointMagic;
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ck.version.size()));
  out += ck.version;
  const std::string cfg = to_text(ck.config());
  detail::put_le<std::uint64_t>(out, cfg.size());
  out += cfg;
  for (double v : {ck.stats.mean, ck.stats.std, ck.stats.lambert.delta, ck.stats.lambert.mu,
                   ck.stats.lambert.sigma}) {
    detail::put_le<double>(out, v);
  }
  detail::write_section(out, ck.model.generator);
  detail::write_section(out, ck.model.discriminator);
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view data) {
  detail::ByteReader in(data);
  if (in.bytes(kCheckpointMagic.size(), "magic") != kCheckpointMagic) {
    throw ParseError("not a checkpoint file (bad magic)", 0);
  }
  const auto vlen = in.get<std::uint32_t>("version length");
  const std::string version(in.bytes(vlen, "version"));
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version '" + version + "' is not supported (expected '" +
                       std::string(kCheckpointVersion) + "')");
  }
  const auto clen = in.get<std::uint64_t>("config length");
  const std::size_t config_at = in.offset();
  const std::string cfg_text(in.bytes(clen, "config"));
  SigGanConfig cfg;
  try {
    cfg = parse_sig_gan_config(cfg_text);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint config block: ") + e.what(), config_at);
  }

  Checkpoint ck;
  ck.version = version;
  ck.stats.mean = in.get<double>("stats");
  ck.stats.std = in.get<double>("stats");
  ck.stats.lambert.delta = in.get<double>("stats");
  ck.stats.lambert.mu = in.get<double>("stats");
  ck.stats.lambert.sigma = in.get<double>("stats");
  ck.model = SigGan(cfg);
  detail::read_section(in, ck.model.generator, "generator");
  detail::read_section(in, ck.model.discriminator, "discriminator");
  if (!in.at_end()) throw ParseError("trailing bytes after checkpoint", in.offset());
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  write_file_atomic(path, serialize_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace siggan

#endif  // SIGGAN_CHECKPOINT_HPP

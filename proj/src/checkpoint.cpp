#include "tempent/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace tempent {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'E', 'M', 'P', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + n);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  template <class T>
  T get() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }
  void raw(void* dst, std::size_t n) {
    if (n > bytes.size() - pos) throw CheckpointError("checkpoint: truncated file");
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view text) {
  return fnv1a({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<std::uint8_t> encode_checkpoint(const TemporalMps& l) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put(l.params.J);
  w.put(l.params.h);
  w.put(l.params.g);
  w.put(l.params.dt);
  w.put<std::uint64_t>(l.bond_cap);
  w.put(l.drift_threshold);
  w.put(l.trace_drift);
  w.put(l.max_discarded);
  w.put<std::uint8_t>(l.side == Side::left ? 0 : 1);
  w.put(l.state.log_norm);
  w.put<std::uint64_t>(l.renyi2_history.size());
  for (double s : l.renyi2_history) w.put(s);
  w.put<std::uint64_t>(l.n_t());
  for (const auto& site : l.state.sites) {
    w.put<std::uint64_t>(site.rank());
    for (std::size_t d : site.shape()) w.put<std::uint64_t>(d);
    w.raw(site.data().data(), site.size() * sizeof(cplx));
  }
  const std::uint64_t sum = fnv1a(w.out);
  w.put(sum);
  return std::move(w.out);
}

TemporalMps decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("checkpoint: not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  r.pos = sizeof kMagic;
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    std::ostringstream msg;
    msg << "checkpoint: version " << version << " cannot be resumed by this build (expects " << kCheckpointVersion << ")";
    throw CheckpointError(msg.str());
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof stored);
  if (fnv1a(bytes.first(body)) != stored) throw CheckpointError("checkpoint: checksum mismatch, file is corrupted");
  r.bytes = bytes.first(body);

  TemporalMps l;
  l.params.J = r.get<double>();
  l.params.h = r.get<double>();
  l.params.g = r.get<double>();
  l.params.dt = r.get<double>();
  l.bond_cap = r.get<std::uint64_t>();
  l.drift_threshold = r.get<double>();
  l.trace_drift = r.get<double>();
  l.max_discarded = r.get<double>();
  l.side = r.get<std::uint8_t>() == 0 ? Side::left : Side::right;
  l.state.log_norm = r.get<double>();
  const auto nh = r.get<std::uint64_t>();
  if (nh > r.bytes.size()) throw CheckpointError("checkpoint: implausible history length");
  l.renyi2_history.resize(nh);
  for (auto& s : l.renyi2_history) s = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  if (n > r.bytes.size()) throw CheckpointError("checkpoint: implausible site count");
  for (std::uint64_t t = 0; t < n; ++t) {
    const auto rank = r.get<std::uint64_t>();
    if (rank != 3) throw CheckpointError("checkpoint: site tensor is not rank 3");
    Shape shape(3);
    std::size_t volume = 1;
    for (auto& d : shape) {
      d = r.get<std::uint64_t>();
      if (d == 0 || d > r.bytes.size()) throw CheckpointError("checkpoint: implausible tensor shape");
      volume *= d;
    }
    if (volume * sizeof(cplx) > r.bytes.size() - r.pos) throw CheckpointError("checkpoint: truncated file");
    DenseTensor site(shape);
    r.raw(site.data().data(), volume * sizeof(cplx));
    l.state.sites.push_back(std::move(site));
  }
  if (r.pos != r.bytes.size()) throw CheckpointError("checkpoint: trailing bytes after payload");
  try {
    l.params.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: stored parameters invalid: ") + e.what());
  }
  return l;
}

void save_checkpoint(const TemporalMps& l, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(l);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("checkpoint: cannot write " + tmp.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CheckpointError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TemporalMps load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace tempent

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xrt/classifier.hpp"
#include "xrt/io.hpp"

namespace xrt {

namespace {

constexpr char kMagic[8] = {'X', 'R', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    return std::string(take(n));
  }
  std::string_view take(std::size_t n) {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::MalformedRecord, "checkpoint is truncated");
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Classifier& c) {
  Writer payload;
  payload.u64(c.config.vocab_size);
  payload.u64(c.config.embed_dim);
  payload.u64(c.config.hidden_dim);
  payload.u8(c.config.encoder == EncoderKind::MeanPool ? 0 : 1);
  payload.u64(c.config.num_classes);
  payload.f64(c.config.temperature);
  payload.f64(c.config.dropout_rate);
  payload.u32(static_cast<std::uint32_t>(c.labels.size()));
  for (const auto& n : c.labels.names()) payload.str(n);
  payload.u64(c.vocab.size());
  for (const auto& t : c.vocab.tokens()) payload.str(t);
  payload.u32(9);
  zip_tensors(
      [&](std::string_view name, const auto& t) {
        payload.str(name);
        payload.u64(static_cast<std::uint64_t>(t.rows()));
        payload.u64(static_cast<std::uint64_t>(t.cols()));
        for (Eigen::Index i = 0; i < t.size(); ++i) payload.f64(t.data()[i]);
      },
      c.params);

  Writer file;
  file.raw(std::string_view(kMagic, sizeof kMagic));
  file.u32(kVersion);
  file.u64(payload.bytes().size());
  file.raw(payload.bytes());
  file.u64(fnv1a(payload.bytes()));
  return std::move(file.bytes());
}

Classifier decode_checkpoint(std::string_view bytes) {
  Reader file(bytes);
  if (bytes.size() < sizeof kMagic || file.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw Error(ErrorCode::MalformedRecord, "not a checkpoint file");
  const auto version = file.u32();
  if (version != kVersion)
    throw Error(ErrorCode::UnsupportedVersion, "checkpoint format version " + std::to_string(version));
  const auto size = file.u64();
  const auto payload_bytes = file.take(size);
  if (file.u64() != fnv1a(payload_bytes)) throw Error(ErrorCode::ChecksumMismatch, "checkpoint checksum mismatch");
  if (!file.done()) throw Error(ErrorCode::MalformedRecord, "trailing bytes after checkpoint");

  Reader payload(payload_bytes);
  Classifier c;
  c.config.vocab_size = payload.u64();
  c.config.embed_dim = payload.u64();
  c.config.hidden_dim = payload.u64();
  c.config.encoder = payload.u8() == 0 ? EncoderKind::MeanPool : EncoderKind::BiRecurrent;
  c.config.num_classes = payload.u64();
  c.config.temperature = payload.f64();
  c.config.dropout_rate = payload.f64();
  c.config.validate();
  std::vector<std::string> labels(payload.u32());
  for (auto& l : labels) l = payload.str();
  c.labels = LabelSpace(std::move(labels));
  std::vector<std::string> vocab(payload.u64());
  for (auto& t : vocab) t = payload.str();
  c.vocab = Vocabulary(std::move(vocab));
  if (payload.u32() != 9) throw Error(ErrorCode::MalformedRecord, "unexpected tensor count");
  c.params = ClassifierParams<double>::zeros(c.config);
  zip_tensors(
      [&](std::string_view name, auto& t) {
        if (payload.str() != name) throw Error(ErrorCode::MalformedRecord, "tensor order mismatch at " + std::string(name));
        const auto rows = payload.u64();
        const auto cols = payload.u64();
        if (rows != static_cast<std::uint64_t>(t.rows()) || cols != static_cast<std::uint64_t>(t.cols()))
          throw Error(ErrorCode::ShapeMismatch, "tensor " + std::string(name) + " has an unexpected shape");
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = payload.f64();
      },
      c.params);
  if (!payload.done()) throw Error(ErrorCode::MalformedRecord, "trailing bytes in checkpoint payload");
  if (c.vocab.size() != c.config.vocab_size || c.labels.size() != c.config.num_classes)
    throw Error(ErrorCode::ShapeMismatch, "checkpoint vocabulary or labels disagree with its config");
  return c;
}

void save_checkpoint(const std::string& path, const Classifier& classifier) {
  write_file_atomic(path, encode_checkpoint(classifier));
}

Classifier load_checkpoint(const std::string& path) { return decode_checkpoint(read_file(path)); }

}  // namespace xrt

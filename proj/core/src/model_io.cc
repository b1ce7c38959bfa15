#include "jointkpe/model_io.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "jointkpe/error.h"

namespace jointkpe {
namespace {

constexpr char kMagic[8] = {'J', 'K', 'P', 'E', 'M', 'O', 'D', 'L'};

template <typename T>
void write_le(std::ostream& out, T v) {
  std::array<unsigned char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    Throw(ErrorKind::kLoad, "unexpected end of model data");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_u64(std::ostream& out, std::uint64_t v) { write_le<std::uint64_t>(out, v); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void write_model(std::ostream& out, const ModelParams& params) {
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, kModelFormatVersion);
  write_u64(out, params.d());
  write_u64(out, params.d_g());
  write_u64(out, params.k_max());
  write_u64(out, params.encoder.vocab_size());
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.encoder_kind));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.encoder.mix_window));
  write_le<std::uint32_t>(out, params.encoder.trainable ? 1u : 0u);
  for (const auto& t : params.tensors()) {
    for (double v : t.values()) write_f64(out, v);
  }
  if (!out) Throw(ErrorKind::kLoad, "failed writing model data");
}

ModelParams read_model(std::istream& in, const std::string& source) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    Throw(ErrorKind::kLoad, source + ": not a model file");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    Throw(ErrorKind::kLoad, source + ": unsupported model version " + std::to_string(version));
  }
  ModelConfig cfg;
  cfg.d = read_u64(in);
  cfg.d_g = read_u64(in);
  cfg.k_max = read_u64(in);
  const std::uint64_t vocab_size = read_u64(in);
  const auto kind = read_le<std::uint32_t>(in);
  if (kind > 1) Throw(ErrorKind::kLoad, source + ": unknown encoder kind " + std::to_string(kind));
  cfg.encoder_kind = static_cast<EncoderKind>(kind);
  cfg.mix_window = static_cast<int>(read_le<std::uint32_t>(in));
  const auto flags = read_le<std::uint32_t>(in);
  if (cfg.d == 0 || cfg.d_g == 0 || cfg.k_max == 0 || cfg.d > 65536 || cfg.d_g > 65536 ||
      cfg.k_max > 64 || cfg.mix_window < 1 || cfg.mix_window % 2 == 0) {
    Throw(ErrorKind::kLoad, source + ": invalid model header");
  }
  ModelParams params = init_model(cfg, cfg.encoder_kind == EncoderKind::kToy ? vocab_size : 0);
  params.encoder.trainable = (flags & 1u) != 0;
  for (auto& t : params.tensors()) {
    for (double& v : t.values()) v = read_f64(in);
  }
  params.validate();
  return params;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) Throw(ErrorKind::kLoad, "cannot write model " + path.string());
    write_model(out, params);
  }
  std::ofstream manifest(path.string() + ".manifest", std::ios::binary);
  manifest << "format jointkpe-model\n"
           << "version " << kModelFormatVersion << "\n"
           << "d " << params.d() << "\n"
           << "d_g " << params.d_g() << "\n"
           << "k_max " << params.k_max() << "\n"
           << "vocab_size " << params.encoder.vocab_size() << "\n"
           << "encoder " << (params.encoder_kind == EncoderKind::kToy ? "toy" : "precomputed")
           << "\n"
           << "mix_window " << params.encoder.mix_window << "\n";
  for (const auto& t : params.tensors()) {
    manifest << "tensor " << t.name << " " << t.rows << " " << t.cols << "\n";
  }
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kLoad, "cannot open model " + path.string());
  return read_model(in, path.string());
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Throw(ErrorKind::kLoad, "cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h = (h ^ static_cast<unsigned char>(buf[i])) * 1099511628211ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace jointkpe

#ifndef JOINTKPE_MODEL_IO_H_
#define JOINTKPE_MODEL_IO_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "jointkpe/kpe_core.h"

namespace jointkpe {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Binary layout, all little-endian:
//   "JKPEMODL" | u32 version | u64 d | u64 d_g | u64 k_max | u64 vocab_size |
//   u32 encoder kind | i32 mix_window | u32 flags (bit0: encoder trainable) |
//   f64 tensors in ModelParams::tensors() order.
void write_model(std::ostream& out, const ModelParams& params);
ModelParams read_model(std::istream& in, const std::string& source = "<stream>");

// Writes `path` plus a textual `path.manifest` listing the header fields and
// every tensor shape.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);
void write_u64(std::ostream& out, std::uint64_t v);
std::uint64_t read_u64(std::istream& in);

// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace jointkpe

#endif  // JOINTKPE_MODEL_IO_H_

// Copyright 2026 The depth-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEPTH_BINARY_IO_H_
#define DEPTH_BINARY_IO_H_

// Little-endian primitives shared by the vocab, shard and checkpoint formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "depth/errors.h"

namespace depth::binio {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

inline void put_f32(std::ostream& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f64(std::ostream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_bytes(std::ostream& out, std::string_view s) {
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s);
}

inline void read_exact(std::istream& in, char* dst, std::size_t n,
                       std::string_view what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError("unexpected end of file while reading " + std::string(what));
  }
}

inline std::uint32_t get_u32(std::istream& in, std::string_view what) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& in, std::string_view what) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline float get_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(get_u32(in, what));
}

inline double get_f64(std::istream& in, std::string_view what) {
  return std::bit_cast<double>(get_u64(in, what));
}

inline std::string get_string(std::istream& in, std::uint32_t max_len,
                              std::string_view what) {
  const std::uint32_t len = get_u32(in, what);
  if (len > max_len) {
    throw DataError("implausible length " + std::to_string(len) + " for " +
                    std::string(what));
  }
  std::string s(len, '\0');
  read_exact(in, s.data(), len, what);
  return s;
}

inline void expect_magic(std::istream& in, std::string_view magic,
                         std::string_view what) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(magic.size()));
  if (static_cast<std::size_t>(in.gcount()) != magic.size() || got != magic) {
    throw DataError("bad magic: not a " + std::string(what) + " file");
  }
}

}  // namespace depth::binio

#endif  // DEPTH_BINARY_IO_H_

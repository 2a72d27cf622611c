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

#include "depth/checkpoint.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "depth/binary_io.h"
#include "depth/errors.h"

namespace depth {
namespace {

constexpr std::string_view kMagic = "DPTHCKPT";
constexpr std::string_view kEndMarker = "DPTHEND!";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxHeaderBytes = 1u << 20;
constexpr std::uint32_t kMaxNameBytes = 4096;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string build_header(const Checkpoint& c) {
  std::ostringstream h;
  const ModelConfig& m = c.model;
  h << "d_model=" << m.d_model << "\n"
    << "n_heads=" << m.n_heads << "\n"
    << "enc_layers=" << m.enc_layers << "\n"
    << "dec_layers=" << m.dec_layers << "\n"
    << "d_ff=" << m.d_ff << "\n"
    << "vocab_size=" << m.vocab_size << "\n"
    << "max_len=" << m.max_len << "\n"
    << "dropout=" << format_double(m.dropout) << "\n"
    << "init_seed=" << m.init_seed << "\n"
    << "step=" << c.step << "\n"
    << "adam_t=" << c.adam_t << "\n";
  for (const auto& [key, value] : c.meta) {
    if (key.find_first_of("=\n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint metadata '" + key + "' contains '=' or newline");
    }
    h << "meta." << key << "=" << value << "\n";
  }
  return h.str();
}

template <typename Int>
Int parse_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError("checkpoint header lacks '" + key + "'");
  Int v{};
  const auto* end = it->second.data() + it->second.size();
  const auto r = std::from_chars(it->second.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw DataError("checkpoint header value for '" + key + "' is not an integer");
  }
  return v;
}

void put_tensor(std::ostream& out, const std::string& name, const Matrix<float>& t) {
  binio::put_string(out, name);
  binio::put_u32(out, 2);
  binio::put_u32(out, static_cast<std::uint32_t>(t.rows()));
  binio::put_u32(out, static_cast<std::uint32_t>(t.cols()));
  std::string payload(static_cast<std::size_t>(t.size()) * 4, '\0');
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(t.data()[i]);
    for (int b = 0; b < 4; ++b) {
      payload[static_cast<std::size_t>(i) * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
  binio::put_bytes(out, payload);
}

Matrix<float> get_tensor(std::istream& in, std::string* name) {
  *name = binio::get_string(in, kMaxNameBytes, "tensor name");
  const std::uint32_t ndim = binio::get_u32(in, "tensor rank");
  if (ndim != 2) throw DataError("tensor '" + *name + "' has rank " + std::to_string(ndim));
  const std::uint32_t rows = binio::get_u32(in, "tensor rows");
  const std::uint32_t cols = binio::get_u32(in, "tensor cols");
  if (static_cast<std::uint64_t>(rows) * cols > (1ull << 31)) {
    throw DataError("tensor '" + *name + "' has implausible shape");
  }
  Matrix<float> t(rows, cols);
  std::string payload(static_cast<std::size_t>(rows) * cols * 4, '\0');
  binio::read_exact(in, payload.data(), payload.size(), "tensor '" + *name + "'");
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(
                  static_cast<unsigned char>(payload[static_cast<std::size_t>(i) * 4 + b]))
              << (8 * b);
    }
    t.data()[i] = std::bit_cast<float>(bits);
  }
  return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  if (c.has_optimizer_state() &&
      (c.adam_m.size() != c.params.size() || c.adam_v.size() != c.params.size())) {
    throw std::invalid_argument("optimizer state does not match the parameters");
  }
  // Write to a temporary name first so a crash never leaves a torn file.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    binio::put_bytes(out, kMagic);
    binio::put_u32(out, kVersion);
    binio::put_string(out, build_header(c));
    const std::size_t n = c.params.size();
    const std::size_t count = c.has_optimizer_state() ? 3 * n : n;
    binio::put_u32(out, static_cast<std::uint32_t>(count));
    for (std::size_t i = 0; i < n; ++i) put_tensor(out, c.params.names[i], c.params.tensors[i]);
    if (c.has_optimizer_state()) {
      for (std::size_t i = 0; i < n; ++i) {
        put_tensor(out, "adam_m/" + c.params.names[i], c.adam_m.tensors[i]);
      }
      for (std::size_t i = 0; i < n; ++i) {
        put_tensor(out, "adam_v/" + c.params.names[i], c.adam_v.tensors[i]);
      }
    }
    binio::put_bytes(out, kEndMarker);
    out.flush();
    if (!out) throw DataError("write failed for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<int> expected_vocab_size) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  binio::expect_magic(in, kMagic, "checkpoint");
  const std::uint32_t version = binio::get_u32(in, "checkpoint version");
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::string header = binio::get_string(in, kMaxHeaderBytes, "checkpoint header");
  std::map<std::string, std::string> kv;
  std::istringstream lines(header);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed checkpoint header line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  Checkpoint c;
  c.model.d_model = parse_int<int>(kv, "d_model");
  c.model.n_heads = parse_int<int>(kv, "n_heads");
  c.model.enc_layers = parse_int<int>(kv, "enc_layers");
  c.model.dec_layers = parse_int<int>(kv, "dec_layers");
  c.model.d_ff = parse_int<int>(kv, "d_ff");
  c.model.vocab_size = parse_int<int>(kv, "vocab_size");
  c.model.max_len = parse_int<int>(kv, "max_len");
  c.model.init_seed = parse_int<std::uint64_t>(kv, "init_seed");
  c.step = parse_int<std::int64_t>(kv, "step");
  c.adam_t = parse_int<std::uint64_t>(kv, "adam_t");
  const auto dropout = kv.find("dropout");
  if (dropout == kv.end()) throw DataError("checkpoint header lacks 'dropout'");
  c.model.dropout = std::strtod(dropout->second.c_str(), nullptr);
  for (const auto& [key, value] : kv) {
    if (key.rfind("meta.", 0) == 0) c.meta[key.substr(5)] = value;
  }
  try {
    c.model.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint holds an invalid model config: ") + e.what());
  }
  if (expected_vocab_size && *expected_vocab_size != c.model.vocab_size) {
    throw DataError("checkpoint vocab size " + std::to_string(c.model.vocab_size) +
                    " does not match the expected " + std::to_string(*expected_vocab_size));
  }

  const std::uint32_t count = binio::get_u32(in, "tensor count");
  std::vector<std::string> names;
  std::vector<Matrix<float>> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    tensors.push_back(get_tensor(in, &name));
    names.push_back(std::move(name));
  }
  std::string end(kEndMarker.size(), '\0');
  binio::read_exact(in, end.data(), end.size(), "checkpoint end marker");
  if (end != kEndMarker) throw DataError("checkpoint end marker missing");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("trailing bytes after checkpoint end marker");
  }

  // Validates names and shapes against the config.
  const Transformer<float> probe(c.model, [&] {
    ParameterSet<float> p;
    for (std::uint32_t i = 0; i < count; ++i) {
      if (names[i].rfind("adam_", 0) == 0) break;
      p.names.push_back(names[i]);
      p.tensors.push_back(tensors[i]);
      p.decays.push_back(false);
    }
    return p;
  }());
  c.params = probe.params();
  const std::size_t n = c.params.size();
  if (count != n && count != 3 * n) {
    throw DataError("checkpoint has " + std::to_string(count) + " tensors, expected " +
                    std::to_string(n) + " or " + std::to_string(3 * n));
  }
  if (count == 3 * n) {
    c.adam_m = c.params.zeros_like();
    c.adam_v = c.params.zeros_like();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t im = n + i, iv = 2 * n + i;
      if (names[im] != "adam_m/" + c.params.names[i] ||
          names[iv] != "adam_v/" + c.params.names[i] ||
          tensors[im].rows() != c.params.tensors[i].rows() ||
          tensors[im].cols() != c.params.tensors[i].cols() ||
          tensors[iv].rows() != c.params.tensors[i].rows() ||
          tensors[iv].cols() != c.params.tensors[i].cols()) {
        throw DataError("optimizer state for '" + c.params.names[i] + "' is inconsistent");
      }
      c.adam_m.tensors[i] = std::move(tensors[im]);
      c.adam_v.tensors[i] = std::move(tensors[iv]);
    }
  }
  return c;
}

}  // namespace depth

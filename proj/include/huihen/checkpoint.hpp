// Versioned parameter container with a portable binary encoding and a
// canonical text encoding. Values are stored as 64-bit IEEE doubles; both
// encodings round-trip bit-exactly and load() detects which one it is given.
//
// Binary layout (all integers little-endian):
//   "HUIHENCK" u32 version  str config_hash
//   u32 n_meta   { str key  str value }*
//   u32 n_array  { str name  u32 rank  u64 dims[rank]  f64 values[prod(dims)] }*
// where str = u32 length + bytes.
//
// Text layout:
//   huihen-checkpoint <version>
//   config_hash <hash>
//   meta <n>         followed by n lines  <key>\t<escaped value>
//   arrays <n>       followed by n pairs of lines
//     array <name> <rank> <dims...>
//     <values separated by single spaces, shortest round-trip form>
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "huihen/common.hpp"

namespace huihen {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'H', 'U', 'I', 'H', 'E', 'N', 'C', 'K'};

struct CheckpointArray {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;

  friend bool operator==(const CheckpointArray&, const CheckpointArray&) = default;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_hash;
  std::map<std::string, std::string> meta;
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const {
    for (const auto& a : arrays)
      if (a.name == name) return &a;
    return nullptr;
  }

  bool has(const std::string& name) const { return find(name) != nullptr; }

  std::string meta_or(const std::string& key, const std::string& fallback = "") const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
  }
};

enum class CheckpointFormat { kBinary, kText };

namespace detail {

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

inline void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint64_t get_u(std::istream& in, int bytes) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  if (!in) throw ParseError("checkpoint: truncated binary data");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline std::string get_str(std::istream& in) {
  const auto n = get_u(in, 4);
  if (n > (1u << 30)) throw ParseError("checkpoint: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("checkpoint: truncated string");
  return s;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\')
      out += "\\\\";
    else if (c == '\n')
      out += "\\n";
    else if (c == '\t')
      out += "\\t";
    else
      out += c;
  }
  return out;
}

inline std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::size_t element_count(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ck, std::ostream& out,
                            CheckpointFormat format = CheckpointFormat::kBinary) {
  if (format == CheckpointFormat::kBinary) {
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u32(out, ck.version);
    detail::put_str(out, ck.config_hash);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.meta.size()));
    for (const auto& [k, v] : ck.meta) {
      detail::put_str(out, k);
      detail::put_str(out, v);
    }
    detail::put_u32(out, static_cast<std::uint32_t>(ck.arrays.size()));
    for (const auto& a : ck.arrays) {
      detail::put_str(out, a.name);
      detail::put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
      for (auto d : a.dims) detail::put_u64(out, d);
      for (double v : a.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return;
  }
  out << "huihen-checkpoint " << ck.version << '\n';
  out << "config_hash " << ck.config_hash << '\n';
  out << "meta " << ck.meta.size() << '\n';
  for (const auto& [k, v] : ck.meta) out << k << '\t' << detail::escape(v) << '\n';
  out << "arrays " << ck.arrays.size() << '\n';
  for (const auto& a : ck.arrays) {
    out << "array " << a.name << ' ' << a.dims.size();
    for (auto d : a.dims) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      if (i) out << ' ';
      out << format_double(a.values[i]);
    }
    out << '\n';
  }
}

namespace detail {

inline Checkpoint load_binary(std::istream& in) {
  Checkpoint ck;
  ck.version = static_cast<std::uint32_t>(get_u(in, 4));
  if (ck.version != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(ck.version));
  ck.config_hash = get_str(in);
  const auto n_meta = get_u(in, 4);
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    auto k = get_str(in);
    ck.meta[k] = get_str(in);
  }
  const auto n_arrays = get_u(in, 4);
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    CheckpointArray a;
    a.name = get_str(in);
    const auto rank = get_u(in, 4);
    for (std::uint64_t r = 0; r < rank; ++r) a.dims.push_back(get_u(in, 8));
    a.values.resize(element_count(a.dims));
    for (auto& v : a.values) v = std::bit_cast<double>(get_u(in, 8));
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

inline Checkpoint load_text(std::istream& in) {
  Checkpoint ck;
  std::string line, word;
  auto next_line = [&]() {
    if (!std::getline(in, line)) throw ParseError("checkpoint: truncated text data");
    return std::istringstream(line);
  };
  {
    auto ls = next_line();
    ls >> word >> ck.version;
    if (word != "huihen-checkpoint") throw ParseError("checkpoint: bad text header");
    if (ck.version != kCheckpointVersion)
      throw ParseError("checkpoint: unsupported version " + std::to_string(ck.version));
  }
  {
    auto ls = next_line();
    ls >> word >> ck.config_hash;
    if (word != "config_hash") throw ParseError("checkpoint: expected config_hash");
  }
  std::size_t n = 0;
  {
    auto ls = next_line();
    ls >> word >> n;
    if (word != "meta") throw ParseError("checkpoint: expected meta section");
  }
  for (std::size_t i = 0; i < n; ++i) {
    next_line();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("checkpoint: bad meta line");
    ck.meta[line.substr(0, tab)] = unescape(std::string_view(line).substr(tab + 1));
  }
  {
    auto ls = next_line();
    ls >> word >> n;
    if (word != "arrays") throw ParseError("checkpoint: expected arrays section");
  }
  for (std::size_t i = 0; i < n; ++i) {
    CheckpointArray a;
    {
      auto ls = next_line();
      std::size_t rank = 0;
      ls >> word >> a.name >> rank;
      if (word != "array") throw ParseError("checkpoint: expected array header");
      a.dims.resize(rank);
      for (auto& d : a.dims) ls >> d;
      if (!ls) throw ParseError("checkpoint: bad array header for " + a.name);
    }
    next_line();
    a.values.resize(element_count(a.dims));
    const auto tokens = split(line, ' ');
    if (a.values.empty() ? !(tokens.size() == 1 && tokens[0].empty())
                         : tokens.size() != a.values.size())
      throw ParseError("checkpoint: value count mismatch for " + a.name);
    for (std::size_t k = 0; k < a.values.size(); ++k)
      if (!parse_double(tokens[k], a.values[k]))
        throw ParseError("checkpoint: bad value in " + a.name);
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

}  // namespace detail

inline Checkpoint load_checkpoint(std::istream& in) {
  char magic[8] = {};
  in.read(magic, 8);
  if (in && std::memcmp(magic, kCheckpointMagic, 8) == 0) return detail::load_binary(in);
  in.clear();
  in.seekg(0);
  return detail::load_text(in);
}

inline void save_checkpoint_file(const Checkpoint& ck, const std::string& path,
                                 CheckpointFormat format = CheckpointFormat::kBinary) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  save_checkpoint(ck, out, format);
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace huihen

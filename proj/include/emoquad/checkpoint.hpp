#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "emoquad/error.hpp"
#include "emoquad/model.hpp"
#include "emoquad/tensor.hpp"
#include "emoquad/trainer.hpp"
#include "emoquad/vocab.hpp"

namespace emoquad {

// Layout, all integers little-endian:
//   "EMOQ" | u32 version | u32 len, JSON (configs + vocabulary) | u32 tensor count
//   per tensor: u32 len, name | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
inline constexpr std::string_view kCheckpointMagic = "EMOQ";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    return std::string(raw(n));
  }

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(name_ + ": corrupt checkpoint at offset " + std::to_string(pos_) + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError(name_ + ": checkpoint truncated at offset " + std::to_string(pos_) + " (needed " +
                      std::to_string(n) + " more bytes)");
    }
  }
  std::uint64_t le(int n) {
    auto s = raw(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }

  const std::vector<char>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<char> serialize_checkpoint(const ModelState& state) {
  nlohmann::json meta{{"train_config", to_json(state.train)},
                      {"model_config", to_json(state.model)},
                      {"vocabulary", {{"max_words", state.vocab.max_words()}, {"words", state.vocab.words()}}}};
  detail::ByteWriter w;
  w.raw(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(meta.dump());
  w.u32(static_cast<std::uint32_t>(state.params.size()));
  for (std::size_t i = 0; i < state.params.size(); ++i) {
    const Tensor& t = state.params.tensor(i);
    w.str(state.params.name(i));
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    for (double v : t.values()) w.f64(v);
  }
  return w.bytes();
}

/// Parses a whole checkpoint; any defect throws before a state is returned.
inline ModelState deserialize_checkpoint(const std::vector<char>& bytes, const std::string& name) {
  detail::ByteReader r(bytes, name);
  if (r.raw(kCheckpointMagic.size()) != kCheckpointMagic) {
    throw DataError(name + ": not a checkpoint (bad magic at offset 0)");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError(name + ": unsupported checkpoint version " + std::to_string(version) +
                    " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }

  ModelState state;
  const std::size_t meta_offset = r.offset();
  const std::string meta_text = r.str();
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    state.train = train_config_from_json(meta.at("train_config"));
    state.model = model_config_from_json(meta.at("model_config"));
    const auto& vj = meta.at("vocabulary");
    state.vocab = Vocabulary(vj.at("words").get<std::vector<std::string>>(), vj.at("max_words").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(name + ": corrupt checkpoint metadata at offset " + std::to_string(meta_offset) + ": " +
                    e.what());
  } catch (const StructuralError& e) {
    throw DataError(name + ": corrupt checkpoint metadata: " + e.what());
  }
  state.model.validate();
  if (state.vocab.size() != state.model.vocab_size) r.fail("vocabulary size does not match model config");

  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    std::string tname = r.str();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) r.fail("implausible tensor rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::size_t elements = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.u64());
      if (d != 0 && elements > r.remaining() / d) r.fail("tensor '" + tname + "' larger than the file");
      elements *= d;
    }
    if (elements > r.remaining() / 8) {
      throw DataError(name + ": checkpoint truncated at offset " + std::to_string(r.offset()) +
                      " inside tensor '" + tname + "'");
    }
    std::vector<double> data(elements);
    for (double& v : data) v = r.f64();
    try {
      state.params.add(tname, Tensor(std::move(shape), std::move(data)));
    } catch (const std::exception& e) {
      r.fail(e.what());
    }
  }
  if (!r.at_end()) r.fail("trailing bytes after the last tensor");
  try {
    state.params.check_shapes(state.model);
  } catch (const StructuralError& e) {
    throw DataError(name + ": " + e.what());
  }
  if (!state.params.all_finite()) throw DataError(name + ": checkpoint contains non-finite parameters");
  return state;
}

inline void save_checkpoint(const ModelState& state, const std::string& path) {
  const auto bytes = serialize_checkpoint(state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

inline ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path);
}

}  // namespace emoquad

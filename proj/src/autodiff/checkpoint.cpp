#include "cael/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace cael {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'E', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw CheckpointError("checkpoint truncated: " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void put_doubles(std::ostream& os, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) put(os, v);
  }
}

void get_doubles(std::istream& is, std::span<double> out, const std::filesystem::path& path) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size() * sizeof(double))))
      throw CheckpointError("checkpoint truncated: " + path.string());
  } else {
    for (double& v : out) v = get<double>(is, path);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const AdamState* adam) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params.entries()) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) put<std::uint64_t>(os, d);
    put_doubles(os, tensor.data());
  }
  put<std::uint8_t>(os, adam ? 1 : 0);
  if (adam) {
    if (adam->first_moment.size() != params.size())
      throw CheckpointError("adam state does not match parameter count");
    put(os, adam->config.learning_rate);
    put(os, adam->config.weight_decay);
    put(os, adam->config.beta1);
    put(os, adam->config.beta2);
    put(os, adam->config.epsilon);
    put(os, adam->learning_rate);
    put<std::uint64_t>(os, adam->step_count);
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_doubles(os, adam->first_moment[i]);
      put_doubles(os, adam->second_moment[i]);
    }
  }
  if (!os) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint (bad magic): " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint32_t>(is, path);
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get<std::uint32_t>(is, path);
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw CheckpointError("checkpoint truncated: " + path.string());
    const auto rank = get<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::uint64_t>(is, path);
    Tensor t(shape);
    get_doubles(is, t.data(), path);
    ckpt.tensors.push_back({std::move(name), std::move(t)});
  }
  if (get<std::uint8_t>(is, path)) {
    AdamState st;
    st.config.learning_rate = get<double>(is, path);
    st.config.weight_decay = get<double>(is, path);
    st.config.beta1 = get<double>(is, path);
    st.config.beta2 = get<double>(is, path);
    st.config.epsilon = get<double>(is, path);
    st.learning_rate = get<double>(is, path);
    st.step_count = get<std::uint64_t>(is, path);
    for (const auto& nt : ckpt.tensors) {
      st.first_moment.emplace_back(nt.tensor.numel());
      get_doubles(is, st.first_moment.back(), path);
      st.second_moment.emplace_back(nt.tensor.numel());
      get_doubles(is, st.second_moment.back(), path);
    }
    ckpt.adam = std::move(st);
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw CheckpointError("trailing bytes after checkpoint data: " + path.string());
  return ckpt;
}

void restore_params(ParamStore& params, const Checkpoint& ckpt) {
  for (auto& [name, tensor] : params.entries()) {
    const NamedTensor* src = nullptr;
    for (const auto& nt : ckpt.tensors)
      if (nt.name == name) src = &nt;
    if (!src) throw CheckpointError("checkpoint lacks parameter '" + name + "'");
    if (src->tensor.shape() != tensor.shape())
      throw CheckpointError("shape mismatch for '" + name + "': checkpoint " +
                            shape_str(src->tensor.shape()) + " vs model " +
                            shape_str(tensor.shape()));
    std::copy(src->tensor.data().begin(), src->tensor.data().end(), tensor.data().begin());
  }
}

}  // namespace cael

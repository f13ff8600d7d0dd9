#pragma once

// Binary checkpoint container. Layout (all integers and floats little-endian):
//
//   "CAELCKPT"                  8 bytes magic
//   u32 version                 currently 1
//   u32 tensor_count
//   tensor_count times:
//     u32 name_length, name bytes (UTF-8, no terminator)
//     u32 rank, u64 dims[rank]
//     f64 values[product(dims)] row-major
//   u8  has_adam
//   if has_adam:
//     f64 initial_lr, weight_decay, beta1, beta2, epsilon, current_lr
//     u64 step_count
//     per tensor, in the order above: f64 first_moment[numel], f64 second_moment[numel]

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "cael/optim.hpp"
#include "cael/params.hpp"

namespace cael {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     const AdamState* adam);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies values by name into an existing store; every store entry must be
// present in the checkpoint with an identical shape.
void restore_params(ParamStore& params, const Checkpoint& ckpt);

}  // namespace cael

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "skim/tensor.hpp"

namespace skim {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Single-file weight format: 4-byte magic, version integer, a manifest
// mapping tensor name to shape and offset, then raw little-endian f64 data.
void save_checkpoint(const std::string& path, const NamedTensors& tensors);

// Reads every tensor in the file.
NamedTensors load_checkpoint(const std::string& path);

// Copies stored values into existing tensors matched by name.
// Missing names or shape mismatches raise an error naming the tensor
// and both shapes.
void load_checkpoint_into(const std::string& path, NamedTensors& dst);

}  // namespace skim

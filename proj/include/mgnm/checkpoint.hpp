#pragma once

#include <string>

#include "mgnm/model.hpp"

namespace mgnm::ckpt {

// Binary checkpoint: "MGNM" magic, u16 format version, then per-tensor
// records (u16 name length, UTF-8 name, u8 rank, u32 dims, little-endian f32
// payload). All integers little-endian.
void save(const model::ModelParameters& params, const std::string& path);
model::ModelParameters load(const std::string& path);

}  // namespace mgnm::ckpt

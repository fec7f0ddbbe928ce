#pragma once

#include <string>

#include "core/model.hpp"

namespace mamsr {

// Checkpoint container, bit-exact:
//   magic "MAMN" | version u32 LE = 1 | manifest length u64 LE |
//   manifest (UTF-8 text: config lines, then one "tensor <name> <dims...>"
//   line per parameter in order) | payload (f32 LE values in manifest order)
//
// Load failures are reported with distinct error codes: bad_magic,
// bad_version, length_mismatch (manifest or payload size), shape_mismatch
// (manifest disagrees with the declared config), malformed (unparseable
// manifest).

void save_checkpoint(const Model<float>& model, const std::string& path);
Model<float> load_checkpoint(const std::string& path);

std::string checkpoint_manifest(const Model<float>& model);

} // namespace mamsr

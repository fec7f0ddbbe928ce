#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"
#include "core/model.hpp"

namespace mamsr {

// Captures the modulation maps of one block on one input image and writes
// them under out_dir:
//   block<r>_csi.csv, block<r>_icd.csv   one "channel,value" row per channel
//   block<r>_csd_c<c>.png, block<r>_gate_c<c>.png   per-channel maps with the
//     block's spatial dims, min-max normalized per map
//   block<r>_bounds.csv                  map,channel,min,max for every PNG
// Files for disabled paths are not written. Returns the written file names.
std::vector<std::string> dump_modulation_maps(const Model<float>& model, const Image& input, int block,
                                              const std::string& out_dir);

} // namespace mamsr

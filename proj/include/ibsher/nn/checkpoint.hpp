#pragma once

#include <filesystem>
#include <iosfwd>

#include "ibsher/nn/mlp.hpp"

namespace ibsher::nn {

// Text checkpoint, version 1. Every real is written as a C99 hex-float so a
// save/load cycle is bit exact.
//
//   ibsher-mlp 1
//   sizes <n0> <n1> ... <nL>
//   activations <a1> ... <aL>
//   normalize <0|1> ... (one flag per layer)
//   layer <k> weight <fan_in*fan_out values, row-major>
//   layer <k> bias <fan_out values>
//   layer <k> stats <0|1> [mean <fan_in values>] [var <fan_in values>]
//   end
void write_checkpoint(std::ostream& out, const Mlp& net);
Mlp read_checkpoint(std::istream& in);

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace ibsher::nn

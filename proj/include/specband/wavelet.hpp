#pragma once

#include <string>
#include <vector>

#include "specband/types.hpp"

namespace specband {

// Multi-level separable Daubechies-4 decomposition with periodic extension.
// Blocks are stored concatenated in scale order, coarsest first:
// (cA2, cH2, cV2, cD2, cH1, cV1, cD1) for two levels. Each block is
// row-major (height, width, channels). Scale indices are zero-based, so
// index 5 of a two-level pyramid is cV1.
struct WaveletPyramid {
  struct Block {
    std::string name;
    int height = 0;
    int width = 0;
    size_t offset = 0;
  };

  int levels = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  int padded_height = 0;
  int padded_width = 0;
  std::vector<Block> blocks;
  std::vector<double> coeff;

  size_t block_count() const { return blocks.size(); }
  size_t block_elements(size_t index) const {
    const Block& b = blocks.at(index);
    return static_cast<size_t>(b.height) * b.width * channels;
  }
  const Block& block(size_t index) const {
    if (index >= blocks.size())
      fail(Errc::index_out_of_range,
           "scale index " + std::to_string(index) + " out of range (" +
               std::to_string(blocks.size()) + " blocks)");
    return blocks[index];
  }
};

WaveletPyramid dwt2(const TensorImage& image, int levels = 2);
TensorImage idwt2(const WaveletPyramid& pyramid);

// Analysis low-pass filter (scaling coefficients), unit energy, sum sqrt(2).
const std::vector<double>& db4_lowpass();
// Quadrature mirror high-pass: hi[m] = (-1)^m lo[L-1-m].
const std::vector<double>& db4_highpass();

}  // namespace specband

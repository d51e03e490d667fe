#pragma once

#include <string>
#include <vector>

#include "enhancekit/random.hpp"
#include "enhancekit/tensor.hpp"

namespace enhancekit {

enum class ToyShape { disc = 0, square = 1, triangle = 2, ring = 3 };
inline constexpr int kToyShapeCount = 4;

struct LabeledImage {
  Tensor image;  // display space
  int label = -1;
};

// One procedural RGB image: a flat-colored shape (anti-aliased by 4x4
// supersampling) over a smooth two-color gradient background.
Tensor make_toy_image(RandomSource& rng, ToyShape shape, int size);
// `count` images cycling through the shape classes.
std::vector<LabeledImage> make_toy_dataset(int count, int size, std::uint64_t seed);

// Dataset directory: PNG files plus index.txt with "filename label" lines.
void write_dataset_dir(const std::string& dir, const std::vector<LabeledImage>& items);
std::vector<LabeledImage> read_dataset_dir(const std::string& dir);

}  // namespace enhancekit

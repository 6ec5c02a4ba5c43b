#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace specband {

// Error codes carried by every specband::Error. The CLI maps these onto
// exit codes (config -> 2, data -> 3, numerical -> 4).
enum class Errc {
  // core
  empty_dataset,
  dimension_too_large,
  index_out_of_range,
  all_zero_spectrum,
  bad_magic,
  truncated_payload,
  unsupported_dtype,
  // bases / bands
  image_too_small,
  basis_shape_mismatch,
  empty_band_list,
  invalid_band_spec,
  // info
  singular_covariance,
  too_few_samples,
  degenerate_labels,
  // shap
  too_many_players,
  degenerate_design,
  // probes
  non_finite_loss,
  singular_ridge_system,
  metric_target_mismatch,
  // audio
  invalid_range,
  kernel_truncated,
  empty_audio,
  rank_deficient_signal,
  too_few_frames,
  // robust
  not_orthonormal,
  dimension_mismatch,
  // cli
  bad_record_length,
  label_out_of_range,
  unknown_command,
  config_error,
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

// H x W x C real-valued signal stored row-major (height, width, channel).
struct TensorImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  TensorImage() = default;
  TensorImage(int h, int w, int c)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, 0.0) {}

  size_t size() const { return data.size(); }
  int dim() const { return height * width * channels; }

  double& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const TensorImage& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }

  // Throws on shape/size inconsistency or non-finite values.
  void validate() const;
};

// Dense per-pixel target with an optional validity mask (empty = all valid).
// Masked pixels are excluded from MAE/AEE means.
struct DenseTarget {
  TensorImage values;
  std::vector<uint8_t> valid;

  bool pixel_valid(int y, int x) const {
    if (valid.empty()) return true;
    return valid[static_cast<size_t>(y) * values.width + x] != 0;
  }
};

// A collection of shape-identical samples with either categorical labels
// in [0, num_classes) or dense targets (one per sample).
struct LabeledDataset {
  std::vector<TensorImage> samples;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<DenseTarget> dense;

  bool categorical() const { return !labels.empty(); }
  size_t size() const { return samples.size(); }

  void validate() const;
};

}  // namespace specband

#include "specband/types.hpp"

#include <cmath>

namespace specband {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::dimension_too_large: return "DimensionTooLarge";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::all_zero_spectrum: return "AllZeroSpectrum";
    case Errc::bad_magic: return "BadMagic";
    case Errc::truncated_payload: return "TruncatedPayload";
    case Errc::unsupported_dtype: return "UnsupportedDtype";
    case Errc::image_too_small: return "ImageTooSmall";
    case Errc::basis_shape_mismatch: return "BasisShapeMismatch";
    case Errc::empty_band_list: return "EmptyBandList";
    case Errc::invalid_band_spec: return "InvalidBandSpec";
    case Errc::singular_covariance: return "SingularCovariance";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::degenerate_labels: return "DegenerateLabels";
    case Errc::too_many_players: return "TooManyPlayers";
    case Errc::degenerate_design: return "DegenerateDesign";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::singular_ridge_system: return "SingularRidgeSystem";
    case Errc::metric_target_mismatch: return "MetricTargetMismatch";
    case Errc::invalid_range: return "InvalidRange";
    case Errc::kernel_truncated: return "KernelTruncated";
    case Errc::empty_audio: return "EmptyAudio";
    case Errc::rank_deficient_signal: return "RankDeficientSignal";
    case Errc::too_few_frames: return "TooFewFrames";
    case Errc::not_orthonormal: return "NotOrthonormal";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::bad_record_length: return "BadRecordLength";
    case Errc::label_out_of_range: return "LabelOutOfRange";
    case Errc::unknown_command: return "UnknownCommand";
    case Errc::config_error: return "ConfigError";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

void TensorImage::validate() const {
  if (height <= 0 || width <= 0 || channels <= 0)
    fail(Errc::basis_shape_mismatch, "tensor dimensions must be positive");
  if (data.size() != static_cast<size_t>(height) * width * channels)
    fail(Errc::basis_shape_mismatch,
         "data length does not match height*width*channels");
  for (double v : data)
    if (!std::isfinite(v))
      fail(Errc::basis_shape_mismatch, "tensor contains non-finite values");
}

void LabeledDataset::validate() const {
  if (samples.empty()) fail(Errc::empty_dataset, "dataset has no samples");
  for (const auto& s : samples) {
    s.validate();
    if (!s.same_shape(samples.front()))
      fail(Errc::basis_shape_mismatch, "samples differ in shape");
  }
  if (!labels.empty()) {
    if (labels.size() != samples.size())
      fail(Errc::dimension_mismatch, "label count != sample count");
    for (int y : labels)
      if (y < 0 || y >= num_classes)
        fail(Errc::label_out_of_range, "label outside [0, num_classes)");
  }
  if (!dense.empty() && dense.size() != samples.size())
    fail(Errc::dimension_mismatch, "dense target count != sample count");
}

}  // namespace specband

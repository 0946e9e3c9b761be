#include "lsvd/edit.hpp"

#include <string>
#include <vector>

#include "lsvd/error.hpp"
#include "lsvd/svd.hpp"
#include "parallel_for.hpp"

namespace lsvd {

void check_edit_inputs(const LatentTensor& x, const LatentTensor& z, const PhiModel* model) {
  if (!(x.shape() == z.shape())) {
    throw ValidationError("latent shape mismatch: x is " + to_string(x.shape()) + ", z is " +
                          to_string(z.shape()));
  }
  if (x.shape().height != x.shape().width) {
    throw ValidationError("AVI requires square channels, got " + to_string(x.shape()));
  }
  if (model) {
    const PhiDims want = PhiDims::for_channel(x.shape().height, x.shape().width);
    if (model->dims.in != want.in || model->dims.out != want.out) {
      throw ValidationError("model dims (in=" + std::to_string(model->dims.in) +
                            ", out=" + std::to_string(model->dims.out) +
                            ") do not match channel size " + std::to_string(x.shape().height) +
                            "x" + std::to_string(x.shape().width));
    }
  }
}

ChannelPredictions predict_singular_values(const LatentTensor& x, const PhiModel* model,
                                           SingularValueSource source) {
  const std::size_t channels = x.shape().channels;
  const std::size_t n = x.shape().height;
  if (source == SingularValueSource::IdentityFromX) {
    ChannelPredictions out{Matrix(channels, n), Matrix(channels, n)};
    for (std::size_t c = 0; c < channels; ++c) {
      const Vector sx = svd(x.channel(c)).S;
      std::copy(sx.begin(), sx.end(), out.S.row(c).begin());
    }
    return out;
  }
  if (!model) throw ValidationError("a model is required unless S is taken from x");
  Matrix inputs(channels, x.shape().channel_size());
  for (std::size_t c = 0; c < channels; ++c) {
    const auto src = x.channel_data(c);
    std::copy(src.begin(), src.end(), inputs.row(c).begin());
  }
  PhiOutput fwd = phi_forward(*model, inputs);
  return {std::move(fwd.S), std::move(fwd.delta_s)};
}

LatentTensor edit_latent(const LatentTensor& x, const LatentTensor& z, const PhiModel* model,
                         const AviConfig& cfg, SingularValueSource source) {
  check_edit_inputs(x, z, source == SingularValueSource::Model ? model : nullptr);
  cfg.validate(x.shape().height);
  const ChannelPredictions pred = predict_singular_values(x, model, source);

  const std::size_t channels = x.shape().channels;
  std::vector<Matrix> out(channels);
  detail::parallel_for(channels, [&](std::size_t c) {
    const AviOutput avi = avi_forward(svd(x.channel(c)), svd(z.channel(c)), pred.S.row(c),
                                      pred.delta_s.row(c), cfg, Stage::Inference);
    out[c] = *avi.y_pred;
  });
  LatentMeta meta = x.meta();
  meta.tag = "avi-edit";
  return assemble_latent(out, meta);
}

}  // namespace lsvd

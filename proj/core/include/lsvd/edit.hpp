#pragma once

#include "lsvd/avi.hpp"
#include "lsvd/latent.hpp"
#include "lsvd/phi.hpp"

namespace lsvd {

// Where the singular values used for composition come from.
enum class SingularValueSource {
  Model,          // S, delta_s <- Phi(x channel)
  IdentityFromX,  // S <- S_x, delta_s <- 0; debugging aid, no model needed
};

// Edits every channel independently: Phi on the flattened x channel, AVI in
// inference mode, y_pred = U_hat diag(S) V_hat. The result inherits x's meta
// with tag "avi-edit". `model` may be null only with IdentityFromX.
LatentTensor edit_latent(const LatentTensor& x, const LatentTensor& z, const PhiModel* model,
                         const AviConfig& cfg,
                         SingularValueSource source = SingularValueSource::Model);

// Throws ValidationError unless x and z share a shape with square channels and
// (when given) the model's dims match the channel size.
void check_edit_inputs(const LatentTensor& x, const LatentTensor& z, const PhiModel* model);

// Predicted (S, delta_s) for each channel of x, one row per channel.
struct ChannelPredictions {
  Matrix S;
  Matrix delta_s;
};
ChannelPredictions predict_singular_values(const LatentTensor& x, const PhiModel* model,
                                           SingularValueSource source);

}  // namespace lsvd

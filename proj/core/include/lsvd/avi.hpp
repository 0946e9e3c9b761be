#pragma once

#include <cstddef>
#include <optional>

#include "lsvd/matrix.hpp"
#include "lsvd/svd.hpp"

namespace lsvd {

struct LossWeights {
  double l1 = 3.0;
  double l2 = 10.0;
  double l3 = 10.0;
  double l4 = 10.0;
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossParts {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
};

inline constexpr double kMaxRho = 1.5;

struct AviConfig {
  // Leading singular vectors kept from x; also the number of reversed z
  // vectors blended into the tail. Requires 1 <= k <= N/2.
  std::size_t k = 32;
  // Blend strength in [0, 1.5]; values above 1 extrapolate.
  double rho = 1.0;
  LossWeights lambdas;

  // Throws ValidationError if the config cannot be applied to N x N channels.
  void validate(std::size_t n) const;
};

enum class Stage { Training, Inference };

struct AttributeBases {
  Matrix U_hat;
  Matrix V_hat;
};

// Blended bases for one channel pair.
//   U_hat = [Ux[:, :k], (1 - rho) Ux[:, k:] + rho Uz'[:, :k]]
//   V_hat = [Vx[:k, :]; (1 - rho) Vx[k:, :] + rho Vz'[:k, :]]
// where Uz' reverses the column order of Uz and Vz' reverses the row order of
// Vz. When k < N/2 the tail block is wider than k; the z contribution fills
// its first k columns (rows) and the remainder is (1 - rho) times x's.
AttributeBases build_attribute_bases(const SvdTriple& svd_x, const SvdTriple& svd_z,
                                     std::size_t k, double rho);

// Outputs of one AVI pass. Fields not produced by the requested stage stay
// empty: Training fills y_hat/y_tilde, Inference fills U_hat/V_hat/y_pred.
struct AviOutput {
  std::optional<Matrix> y_hat;
  std::optional<Matrix> y_tilde;
  std::optional<Matrix> U_hat;
  std::optional<Matrix> V_hat;
  std::optional<Matrix> y_pred;
  Vector S;
  Vector delta_s;
  Vector S_x;
};

// y_hat = U_hat diag(S) V_hat, y_tilde = rev_cols(U_hat) diag(S + ds) rev_rows(V_hat),
// y_pred = U_hat diag(S) V_hat.
AviOutput avi_forward(const Matrix& x_channel, const Matrix& z_channel, std::span<const double> S,
                      std::span<const double> delta_s, const AviConfig& cfg, Stage stage);
AviOutput avi_forward(const SvdTriple& svd_x, const SvdTriple& svd_z, std::span<const double> S,
                      std::span<const double> delta_s, const AviConfig& cfg, Stage stage);

double loss_l1(const Matrix& y_hat, const Matrix& z);
double loss_l2(const Matrix& y_tilde, const Matrix& x);
double loss_l3(std::span<const double> S, std::span<const double> S_z);
double loss_l4(std::span<const double> S, std::span<const double> delta_s,
               std::span<const double> S_x);
double loss_total(const LossParts& parts, const LossWeights& lambdas);

// Loss terms of one channel pair together with the gradient of the weighted
// total with respect to S and delta_s. The bases are constants here.
struct AviLossGradient {
  LossParts parts;
  double total = 0.0;
  Vector grad_S;
  Vector grad_delta_s;
};

AviLossGradient avi_loss_and_gradient(const SvdTriple& svd_x, const SvdTriple& svd_z,
                                      const Matrix& x_channel, const Matrix& z_channel,
                                      std::span<const double> S, std::span<const double> delta_s,
                                      const AviConfig& cfg);

}  // namespace lsvd

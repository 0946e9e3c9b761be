#include "lsvd/avi.hpp"

#include <cmath>
#include <string>

#include "lsvd/error.hpp"

namespace lsvd {
namespace {

void require_square_pair(const SvdTriple& x, const SvdTriple& z) {
  const std::size_t n = x.U.rows();
  if (x.U.cols() != n || x.V.rows() != n || x.V.cols() != n || x.S.size() != n) {
    throw ValidationError("AVI requires square channels, got U " + std::to_string(x.U.rows()) +
                          "x" + std::to_string(x.U.cols()) + " and V " +
                          std::to_string(x.V.rows()) + "x" + std::to_string(x.V.cols()));
  }
  if (z.U.rows() != n || z.U.cols() != n || z.V.rows() != n || z.V.cols() != n ||
      z.S.size() != n) {
    throw ValidationError("shape mismatch between x and z channels");
  }
}

void require_vector(std::span<const double> v, std::size_t n, const char* name) {
  if (v.size() != n) {
    throw ValidationError(std::string(name) + " has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(n));
  }
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string("non-finite values in ") + name);
}

// diag(U^T R V^T)_i = sum_a U_ai (R_a . V_i)
Vector diag_of_projection(const Matrix& U, const Matrix& R, const Matrix& V) {
  const std::size_t n = U.cols();
  Vector d(n, 0.0);
  for (std::size_t a = 0; a < R.rows(); ++a) {
    auto ra = R.row(a);
    for (std::size_t i = 0; i < n; ++i) {
      const double uai = U(a, i);
      if (uai == 0.0) continue;
      auto vi = V.row(i);
      double dot = 0.0;
      for (std::size_t b = 0; b < ra.size(); ++b) dot += ra[b] * vi[b];
      d[i] += uai * dot;
    }
  }
  return d;
}

Vector add(std::span<const double> a, std::span<const double> b) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace

void AviConfig::validate(std::size_t n) const {
  if (k < 1 || 2 * k > n) {
    throw ValidationError("k=" + std::to_string(k) + " out of range [1, " + std::to_string(n / 2) +
                          "] for " + std::to_string(n) + "x" + std::to_string(n) + " channels");
  }
  if (!(rho >= 0.0 && rho <= kMaxRho)) {
    throw ValidationError("rho out of range [0, 1.5]: " + std::to_string(rho));
  }
  for (double l : {lambdas.l1, lambdas.l2, lambdas.l3, lambdas.l4}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("loss weights must be >= 0");
  }
}

AttributeBases build_attribute_bases(const SvdTriple& svd_x, const SvdTriple& svd_z,
                                     std::size_t k, double rho) {
  require_square_pair(svd_x, svd_z);
  const std::size_t n = svd_x.U.rows();
  AviConfig{k, rho, {}}.validate(n);

  AttributeBases out{svd_x.U, svd_x.V};
  if (rho == 0.0) return out;
  const double keep = 1.0 - rho;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = k; c < n; ++c) {
      // Uz'[:, j] = Uz[:, n-1-j]; only j < k contributes.
      const std::size_t j = c - k;
      const double from_z = j < k ? svd_z.U(r, n - 1 - j) : 0.0;
      out.U_hat(r, c) = keep * svd_x.U(r, c) + rho * from_z;
    }
  }
  for (std::size_t r = k; r < n; ++r) {
    const std::size_t j = r - k;
    for (std::size_t c = 0; c < n; ++c) {
      const double from_z = j < k ? svd_z.V(n - 1 - j, c) : 0.0;
      out.V_hat(r, c) = keep * svd_x.V(r, c) + rho * from_z;
    }
  }
  return out;
}

AviOutput avi_forward(const Matrix& x_channel, const Matrix& z_channel, std::span<const double> S,
                      std::span<const double> delta_s, const AviConfig& cfg, Stage stage) {
  require_same_shape(x_channel, z_channel, "avi_forward");
  return avi_forward(svd(x_channel), svd(z_channel), S, delta_s, cfg, stage);
}

AviOutput avi_forward(const SvdTriple& svd_x, const SvdTriple& svd_z, std::span<const double> S,
                      std::span<const double> delta_s, const AviConfig& cfg, Stage stage) {
  require_square_pair(svd_x, svd_z);
  const std::size_t n = svd_x.U.rows();
  cfg.validate(n);
  require_vector(S, n, "S");
  require_vector(delta_s, n, "delta_s");

  AttributeBases bases = build_attribute_bases(svd_x, svd_z, cfg.k, cfg.rho);

  AviOutput out;
  out.S.assign(S.begin(), S.end());
  out.delta_s.assign(delta_s.begin(), delta_s.end());
  out.S_x = svd_x.S;
  if (stage == Stage::Training) {
    out.y_hat = reconstruct(bases.U_hat, S, bases.V_hat);
    const Vector shifted = add(S, delta_s);
    out.y_tilde = reconstruct(reverse_columns(bases.U_hat), shifted, reverse_rows(bases.V_hat));
  } else {
    out.y_pred = reconstruct(bases.U_hat, S, bases.V_hat);
    out.U_hat = std::move(bases.U_hat);
    out.V_hat = std::move(bases.V_hat);
  }
  return out;
}

double loss_l1(const Matrix& y_hat, const Matrix& z) { return squared_frobenius_distance(y_hat, z); }

double loss_l2(const Matrix& y_tilde, const Matrix& x) {
  return squared_frobenius_distance(y_tilde, x);
}

double loss_l3(std::span<const double> S, std::span<const double> S_z) {
  return squared_distance(S, S_z);
}

double loss_l4(std::span<const double> S, std::span<const double> delta_s,
               std::span<const double> S_x) {
  if (S.size() != delta_s.size()) throw ValidationError("loss_l4: S and delta_s lengths differ");
  return squared_distance(add(S, delta_s), S_x);
}

double loss_total(const LossParts& p, const LossWeights& w) {
  return w.l1 * p.l1 + w.l2 * p.l2 + w.l3 * p.l3 + w.l4 * p.l4;
}

AviLossGradient avi_loss_and_gradient(const SvdTriple& svd_x, const SvdTriple& svd_z,
                                      const Matrix& x_channel, const Matrix& z_channel,
                                      std::span<const double> S, std::span<const double> delta_s,
                                      const AviConfig& cfg) {
  const AviOutput fwd = avi_forward(svd_x, svd_z, S, delta_s, cfg, Stage::Training);
  const AttributeBases bases = build_attribute_bases(svd_x, svd_z, cfg.k, cfg.rho);
  const std::size_t n = S.size();

  AviLossGradient out;
  out.parts.l1 = loss_l1(*fwd.y_hat, z_channel);
  out.parts.l2 = loss_l2(*fwd.y_tilde, x_channel);
  out.parts.l3 = loss_l3(S, svd_z.S);
  out.parts.l4 = loss_l4(S, delta_s, svd_x.S);
  out.total = loss_total(out.parts, cfg.lambdas);

  const Matrix r1 = *fwd.y_hat - z_channel;
  const Matrix r2 = *fwd.y_tilde - x_channel;
  const Vector g1 = diag_of_projection(bases.U_hat, r1, bases.V_hat);
  // y_tilde pairs entry j of (S + ds) with column n-1-j of U_hat.
  const Vector g2_reversed = diag_of_projection(bases.U_hat, r2, bases.V_hat);

  const LossWeights& w = cfg.lambdas;
  out.grad_S.resize(n);
  out.grad_delta_s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double g2 = 2.0 * g2_reversed[n - 1 - i];
    const double g3 = 2.0 * (S[i] - svd_z.S[i]);
    const double g4 = 2.0 * (S[i] + delta_s[i] - svd_x.S[i]);
    out.grad_S[i] = w.l1 * 2.0 * g1[i] + w.l2 * g2 + w.l3 * g3 + w.l4 * g4;
    out.grad_delta_s[i] = w.l2 * g2 + w.l4 * g4;
  }
  return out;
}

}  // namespace lsvd

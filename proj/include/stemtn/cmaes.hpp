#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "stemtn/rng.hpp"

namespace stemtn {

// Compact (mu/mu_w, lambda) CMA-ES for low-dimensional black-box objectives
// (the planner optimizes 3 parameters). Covariance eigendecomposition uses
// cyclic Jacobi sweeps. All randomness comes from Rng, so runs are
// reproducible from a seed.
class Cmaes {
 public:
  Cmaes(std::vector<double> x0, double sigma0, int lambda, std::uint64_t seed)
      : dim_(int(x0.size())), lambda_(lambda), mean_(std::move(x0)), sigma_(sigma0), rng_(seed) {
    mu_ = lambda_ / 2;
    weights_.resize(mu_);
    for (int i = 0; i < mu_; ++i) weights_[i] = std::log(mu_ + 0.5) - std::log(i + 1.0);
    double wsum = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    for (double &w : weights_) w /= wsum;
    mu_eff_ = 0.0;
    for (double w : weights_) mu_eff_ += w * w;
    mu_eff_ = 1.0 / mu_eff_;

    double d = dim_;
    c_sigma_ = (mu_eff_ + 2.0) / (d + mu_eff_ + 5.0);
    d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (d + 1.0)) - 1.0) + c_sigma_;
    c_c_ = (4.0 + mu_eff_ / d) / (d + 4.0 + 2.0 * mu_eff_ / d);
    c_1_ = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff_);
    c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) /
                                     ((d + 2.0) * (d + 2.0) + mu_eff_));
    chi_n_ = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

    C_.assign(dim_ * dim_, 0.0);
    for (int i = 0; i < dim_; ++i) C_[i * dim_ + i] = 1.0;
    p_sigma_.assign(dim_, 0.0);
    p_c_.assign(dim_, 0.0);
    decompose();
  }

  const std::vector<double> &mean() const { return mean_; }

  std::vector<std::vector<double>> ask() {
    zs_.clear();
    std::vector<std::vector<double>> xs;
    for (int k = 0; k < lambda_; ++k) {
      std::vector<double> z(dim_);
      for (double &v : z) v = rng_.next_normal();
      std::vector<double> x(dim_);
      for (int i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < dim_; ++j) acc += BD_[i * dim_ + j] * z[j];
        x[i] = mean_[i] + sigma_ * acc;
      }
      zs_.push_back(std::move(z));
      xs.push_back(std::move(x));
    }
    last_xs_ = xs;
    return xs;
  }

  void tell(const std::vector<double> &fitness) {
    std::vector<int> order(lambda_);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] < fitness[b]; });

    std::vector<double> old_mean = mean_;
    std::vector<double> zw(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (int r = 0; r < mu_; ++r) acc += weights_[r] * last_xs_[order[r]][i];
      mean_[i] = acc;
    }
    for (int i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (int r = 0; r < mu_; ++r) acc += weights_[r] * zs_[order[r]][i];
      zw[i] = acc;
    }
    // p_sigma update in the isotropic frame: B z_w
    std::vector<double> bz(dim_, 0.0);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) bz[i] += B_[i * dim_ + j] * zw[j];
    double ps_norm2 = 0.0;
    for (int i = 0; i < dim_; ++i) {
      p_sigma_[i] = (1.0 - c_sigma_) * p_sigma_[i] +
                    std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * bz[i];
      ps_norm2 += p_sigma_[i] * p_sigma_[i];
    }
    double ps_norm = std::sqrt(ps_norm2);
    bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * (gen_ + 1))) / chi_n_ <
                1.4 + 2.0 / (dim_ + 1.0);
    std::vector<double> y(dim_);
    for (int i = 0; i < dim_; ++i) y[i] = (mean_[i] - old_mean[i]) / sigma_;
    for (int i = 0; i < dim_; ++i)
      p_c_[i] = (1.0 - c_c_) * p_c_[i] +
                (hsig ? std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y[i] : 0.0);

    // covariance: rank-1 + rank-mu
    double c1a = c_1_ * (1.0 - (hsig ? 0.0 : 1.0) * c_c_ * (2.0 - c_c_));
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) {
        double rank_mu = 0.0;
        for (int r = 0; r < mu_; ++r) {
          double yi = (last_xs_[order[r]][i] - old_mean[i]) / sigma_;
          double yj = (last_xs_[order[r]][j] - old_mean[j]) / sigma_;
          rank_mu += weights_[r] * yi * yj;
        }
        C_[i * dim_ + j] = (1.0 - c1a - c_mu_) * C_[i * dim_ + j] +
                           c_1_ * p_c_[i] * p_c_[j] + c_mu_ * rank_mu;
      }
    sigma_ *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
    sigma_ = std::min(sigma_, 1e3);
    ++gen_;
    decompose();
  }

 private:
  void decompose() {
    // Jacobi eigendecomposition of symmetric C into B diag(D^2) B^T
    int n = dim_;
    std::vector<double> a = C_;
    std::vector<double> v(n * n, 0.0);
    for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 32; ++sweep) {
      double off = 0.0;
      for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
      if (off < 1e-24) break;
      for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
          if (std::abs(a[p * n + q]) < 1e-18) continue;
          double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * a[p * n + q]);
          double t = (theta >= 0 ? 1.0 : -1.0) /
                     (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
          for (int k = 0; k < n; ++k) {
            double akp = a[k * n + p], akq = a[k * n + q];
            a[k * n + p] = c * akp - s * akq;
            a[k * n + q] = s * akp + c * akq;
          }
          for (int k = 0; k < n; ++k) {
            double apk = a[p * n + k], aqk = a[q * n + k];
            a[p * n + k] = c * apk - s * aqk;
            a[q * n + k] = s * apk + c * aqk;
          }
          for (int k = 0; k < n; ++k) {
            double vkp = v[k * n + p], vkq = v[k * n + q];
            v[k * n + p] = c * vkp - s * vkq;
            v[k * n + q] = s * vkp + c * vkq;
          }
        }
    }
    B_ = v;
    BD_.assign(n * n, 0.0);
    for (int j = 0; j < n; ++j) {
      double d = std::sqrt(std::max(a[j * n + j], 1e-20));
      for (int i = 0; i < n; ++i) BD_[i * n + j] = B_[i * n + j] * d;
    }
  }

  int dim_, lambda_, mu_ = 0;
  std::vector<double> mean_;
  double sigma_;
  Rng rng_;
  std::vector<double> weights_;
  double mu_eff_ = 0, c_sigma_ = 0, d_sigma_ = 0, c_c_ = 0, c_1_ = 0, c_mu_ = 0, chi_n_ = 0;
  std::vector<double> C_, B_, BD_, p_sigma_, p_c_;
  std::vector<std::vector<double>> zs_, last_xs_;
  int gen_ = 0;
};

}  // namespace stemtn

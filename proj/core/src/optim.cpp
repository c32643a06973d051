#include "truewm/optim.hpp"

#include <cmath>

#include "truewm/error.hpp"

namespace truewm::nn {

AdamW::AdamW(std::vector<Tensor> params, AdamWOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  const double b1 = options_.beta1, b2 = options_.beta2;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto theta = params_[k].mutable_data();
    auto grad = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    const bool has = !grad.empty();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = has ? grad[i] : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= options_.lr * (m_hat / (std::sqrt(v_hat) + options_.eps) + options_.weight_decay * theta[i]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamW::restore(std::uint64_t steps, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  TRUEWM_REQUIRE(m.size() == params_.size() && v.size() == params_.size(), "AdamW::restore: parameter count mismatch");
  for (std::size_t k = 0; k < params_.size(); ++k)
    TRUEWM_REQUIRE(m[k].size() == params_[k].numel() && v[k].size() == params_[k].numel(),
                   "AdamW::restore: moment shape mismatch");
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace truewm::nn

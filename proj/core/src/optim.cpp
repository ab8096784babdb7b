#include "affectreg/optim.hpp"

#include "affectreg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace affectreg {

AdamW::AdamW(AdamWConfig config, const std::vector<std::size_t>& tensor_sizes) : config_(config) {
    moment1_.reserve(tensor_sizes.size());
    moment2_.reserve(tensor_sizes.size());
    for (std::size_t n : tensor_sizes) {
        moment1_.emplace_back(n, 0.0);
        moment2_.emplace_back(n, 0.0);
    }
}

void AdamW::step(std::size_t slot, std::span<double> params, std::span<const double> grads,
                 double lr) {
    if (step_ == 0) throw UsageError("AdamW::step before begin_step");
    auto& m = moment1_.at(slot);
    auto& v = moment2_.at(slot);
    if (params.size() != m.size() || grads.size() != m.size()) {
        throw UsageError("AdamW tensor size mismatch");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw SolverError("non-finite gradient in optimizer step");
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
        v[i] = b2 * v[i] + (1.0 - b2) * grads[i] * grads[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon) +
                     lr * config_.weight_decay * params[i];
    }
}

PlateauScheduler::PlateauScheduler(double initial_lr, double factor, std::size_t patience,
                                   double min_lr, double threshold)
    : lr_(initial_lr), factor_(factor), patience_(patience), min_lr_(min_lr),
      threshold_(threshold) {
    if (factor <= 0.0 || factor >= 1.0) throw UsageError("plateau factor must lie in (0, 1)");
    if (min_lr <= 0.0 || min_lr > initial_lr) {
        throw UsageError("plateau scheduler requires 0 < min_lr <= initial lr");
    }
}

double PlateauScheduler::observe(double validation_loss) {
    if (!best_ || validation_loss < *best_ - threshold_) {
        best_ = validation_loss;
        bad_epochs_ = 0;
    } else {
        ++bad_epochs_;
        if (bad_epochs_ > patience_) {
            lr_ = std::max(lr_ * factor_, min_lr_);
            bad_epochs_ = 0;
        }
    }
    return lr_;
}

} // namespace affectreg

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace affectreg {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled weight decay:
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
// One moment slot per parameter tensor; all slots share the step counter, so
// call begin_step() once per batch and then step() for every tensor.
class AdamW {
public:
    AdamW(AdamWConfig config, const std::vector<std::size_t>& tensor_sizes);

    void begin_step() { ++step_; }

    // Throws SolverError on a non-finite gradient; parameters are untouched
    // in that case.
    void step(std::size_t slot, std::span<double> params, std::span<const double> grads, double lr);

    std::size_t step_index() const { return step_; }
    const AdamWConfig& config() const { return config_; }

private:
    AdamWConfig config_;
    std::vector<std::vector<double>> moment1_;
    std::vector<std::vector<double>> moment2_;
    std::size_t step_ = 0;
};

// Multiplies the learning rate by `factor` once the number of consecutive
// non-improving observations exceeds `patience`; an observation improves when
// it is below best - threshold. Floored at min_lr.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, double factor = 0.8, std::size_t patience = 3,
                     double min_lr = 1e-6, double threshold = 1e-8);

    // Feed one validation loss per epoch; returns the learning rate to use
    // for the next epoch.
    double observe(double validation_loss);

    double lr() const { return lr_; }

private:
    double lr_;
    double factor_;
    std::size_t patience_;
    double min_lr_;
    double threshold_;
    std::optional<double> best_;
    std::size_t bad_epochs_ = 0;
};

} // namespace affectreg

#pragma once

#include "affectreg/matrix.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affectreg {

enum class KernelKind : std::uint8_t { poly3, rbf };

struct SvrConfig {
    KernelKind kernel = KernelKind::rbf;
    std::optional<double> gamma;  // default: 1 / (n_features * feature variance)
    double coef0 = 0.0;           // polynomial independent term
    double C = 1.0;
    double epsilon = 0.1;
    double tolerance = 1e-3;      // KKT violation stopping threshold
    std::size_t max_passes = 10'000'000;
};

// Linear-distance sample weight |midpoint - gold| + 1; samples near the ends
// of the scale weigh more during fitting.
double sample_weight(double gold, double scale_midpoint);

// poly3: (gamma * <x, z>)^3 with coef0 = 0; rbf: exp(-gamma * ||x - z||^2).
double kernel(KernelKind kind, double gamma, double coef0, std::span<const double> x,
              std::span<const double> z);

struct SvrModel {
    KernelKind kernel_kind = KernelKind::rbf;
    double gamma = 1.0;
    double coef0 = 0.0;
    Matrix support_vectors;          // one row per support vector
    std::vector<double> dual_coeffs; // alpha - alpha*, one per support vector
    double bias = 0.0;

    // Diagnostics from the fit.
    double objective = 0.0; // minimized dual objective value
    std::size_t iterations = 0;
};

// Epsilon-insensitive SVR fitted by sequential minimal optimization with
// maximal-KKT-violation pair selection. Per-sample weights scale the box
// constraint to C * w_i. Throws SolverError when the iteration budget is
// exhausted before the KKT gap drops below tolerance.
SvrModel fit_svr(const SvrConfig& config, const Matrix& features, std::span<const double> targets,
                 std::span<const double> weights);

double predict(const SvrModel& model, std::span<const double> x);
std::vector<double> predict(const SvrModel& model, const Matrix& features);

// The sklearn-style "scale" default.
double default_gamma(const Matrix& features);

void save_svr(const SvrModel& model, const std::string& path);
SvrModel load_svr(const std::string& path);

} // namespace affectreg

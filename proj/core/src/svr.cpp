#include "affectreg/svr.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affectreg {

double sample_weight(double gold, double scale_midpoint) {
    return std::fabs(scale_midpoint - gold) + 1.0;
}

double kernel(KernelKind kind, double gamma, double coef0, std::span<const double> x,
              std::span<const double> z) {
    if (x.size() != z.size()) throw UsageError("kernel: dimension mismatch");
    if (kind == KernelKind::poly3) {
        double dot = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
        const double base = gamma * dot + coef0;
        return base * base * base;
    }
    double dist2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - z[i];
        dist2 += d * d;
    }
    return std::exp(-gamma * dist2);
}

double default_gamma(const Matrix& features) {
    // 1 / (n_features * variance of the flattened feature matrix), with a
    // guard for constant features.
    if (features.cols == 0 || features.data.empty()) {
        throw UsageError("cannot derive gamma from empty features");
    }
    double mean = 0.0;
    for (double v : features.data) mean += v;
    mean /= static_cast<double>(features.data.size());
    double var = 0.0;
    for (double v : features.data) {
        const double d = v - mean;
        var += d * d;
    }
    var /= static_cast<double>(features.data.size());
    if (var <= 1e-12) return 1.0 / static_cast<double>(features.cols);
    return 1.0 / (static_cast<double>(features.cols) * var);
}

namespace {

// Dual problem in LIBSVM's 2n-variable form:
//   min 1/2 x^T Q x + p^T x,  z^T x = 0,  0 <= x_a <= C_a
// with x = (alpha, alpha*), z_a = +1 for the alpha half and -1 for the
// alpha* half, Q_ab = z_a z_b K(a mod n, b mod n),
// p_a = eps - y_a (alpha half) or eps + y_a (alpha* half), and
// C_a = C * w_(a mod n).
class SmoSolver {
public:
    SmoSolver(const SvrConfig& config, double gamma, const Matrix& features,
              std::span<const double> targets, std::span<const double> weights)
        : config_(config), gamma_(gamma), features_(features), n_(features.rows) {
        kernel_cache_.assign(n_, {});
        x_.assign(2 * n_, 0.0);
        p_.resize(2 * n_);
        box_.resize(2 * n_);
        gradient_.resize(2 * n_);
        for (std::size_t i = 0; i < n_; ++i) {
            p_[i] = config.epsilon - targets[i];
            p_[i + n_] = config.epsilon + targets[i];
            box_[i] = box_[i + n_] = config.C * weights[i];
            gradient_[i] = p_[i];
            gradient_[i + n_] = p_[i + n_];
        }
    }

    void solve() {
        while (iterations_ < config_.max_passes) {
            auto [i, j, gap] = select_working_pair();
            if (gap <= config_.tolerance) return;
            ++iterations_;
            update_pair(i, j);
        }
        auto [i, j, gap] = select_working_pair();
        if (gap > config_.tolerance) {
            throw SolverError("SMO did not converge within " +
                              std::to_string(config_.max_passes) + " passes (KKT gap " +
                              std::to_string(gap) + ", tolerance " +
                              std::to_string(config_.tolerance) + ")");
        }
    }

    // beta_i = alpha_i - alpha*_i
    std::vector<double> beta() const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = x_[i] - x_[i + n_];
        return out;
    }

    // Bias from the KKT conditions: average of z*G over free variables, else
    // the midpoint of the feasibility interval.
    double bias() const {
        double upper = std::numeric_limits<double>::infinity();
        double lower = -std::numeric_limits<double>::infinity();
        double free_sum = 0.0;
        std::size_t free_count = 0;
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            const double yg = sign(a) * gradient_[a];
            if (x_[a] >= box_[a]) {
                if (sign(a) < 0) upper = std::min(upper, yg);
                else lower = std::max(lower, yg);
            } else if (x_[a] <= 0.0) {
                if (sign(a) > 0) upper = std::min(upper, yg);
                else lower = std::max(lower, yg);
            } else {
                free_sum += yg;
                ++free_count;
            }
        }
        const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count)
                                          : 0.5 * (upper + lower);
        return -rho;
    }

    double objective() const {
        double obj = 0.0;
        for (std::size_t a = 0; a < 2 * n_; ++a) obj += x_[a] * (gradient_[a] + p_[a]);
        return 0.5 * obj;
    }

    std::size_t iterations() const { return iterations_; }
    std::span<const double> raw() const { return x_; }

private:
    static double sign_at(std::size_t a, std::size_t n) { return a < n ? 1.0 : -1.0; }
    double sign(std::size_t a) const { return sign_at(a, n_); }

    const std::vector<double>& kernel_row(std::size_t i) {
        auto& row = kernel_cache_[i];
        if (row.empty()) {
            row.resize(n_);
            const auto xi = features_.row(i);
            for (std::size_t j = 0; j < n_; ++j) {
                row[j] = kernel(config_.kernel, gamma_, config_.coef0, xi, features_.row(j));
            }
        }
        return row;
    }

    double q_diag(std::size_t a) { return kernel_row(a % n_)[a % n_]; }

    // Maximal violating pair: i maximizes -z*G over variables that can move
    // up, j minimizes it over variables that can move down.
    struct Pair {
        std::size_t i;
        std::size_t j;
        double gap;
    };
    Pair select_working_pair() const {
        double up_best = -std::numeric_limits<double>::infinity();
        double down_best = std::numeric_limits<double>::infinity();
        std::size_t i = 2 * n_, j = 2 * n_;
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            const double v = -sign(a) * gradient_[a];
            const bool can_up = sign(a) > 0 ? x_[a] < box_[a] : x_[a] > 0.0;
            const bool can_down = sign(a) > 0 ? x_[a] > 0.0 : x_[a] < box_[a];
            if (can_up && v > up_best) {
                up_best = v;
                i = a;
            }
            if (can_down && v < down_best) {
                down_best = v;
                j = a;
            }
        }
        if (i == 2 * n_ || j == 2 * n_) return {0, 0, 0.0};
        return {i, j, up_best - down_best};
    }

    void update_pair(std::size_t i, std::size_t j) {
        const auto& ki = kernel_row(i % n_);
        const auto& kj = kernel_row(j % n_);
        const double zi = sign(i), zj = sign(j);
        const double qij = zi * zj * ki[j % n_];
        const double old_i = x_[i], old_j = x_[j];

        // Second derivative along the feasible pair direction; identical in
        // both sign cases once Q's signs are folded in.
        double quad = q_diag(i) + q_diag(j) - 2.0 * qij * zi * zj;
        if (quad <= 0.0) quad = 1e-12;

        if (zi != zj) {
            const double delta = (-gradient_[i] - gradient_[j]) / quad;
            const double diff = x_[i] - x_[j];
            x_[i] += delta;
            x_[j] += delta;
            if (diff > 0.0 && x_[j] < 0.0) {
                x_[j] = 0.0;
                x_[i] = diff;
            } else if (diff <= 0.0 && x_[i] < 0.0) {
                x_[i] = 0.0;
                x_[j] = -diff;
            }
            if (diff > box_[i] - box_[j] && x_[i] > box_[i]) {
                x_[i] = box_[i];
                x_[j] = box_[i] - diff;
            } else if (diff <= box_[i] - box_[j] && x_[j] > box_[j]) {
                x_[j] = box_[j];
                x_[i] = box_[j] + diff;
            }
        } else {
            const double delta = (gradient_[i] - gradient_[j]) / quad;
            const double sum = x_[i] + x_[j];
            x_[i] -= delta;
            x_[j] += delta;
            if (sum > box_[i] && x_[i] > box_[i]) {
                x_[i] = box_[i];
                x_[j] = sum - box_[i];
            } else if (sum <= box_[i] && x_[j] < 0.0) {
                x_[j] = 0.0;
                x_[i] = sum;
            }
            if (sum > box_[j] && x_[j] > box_[j]) {
                x_[j] = box_[j];
                x_[i] = sum - box_[j];
            } else if (sum <= box_[j] && x_[i] < 0.0) {
                x_[i] = 0.0;
                x_[j] = sum;
            }
        }

        const double di = x_[i] - old_i;
        const double dj = x_[j] - old_j;
        if (di == 0.0 && dj == 0.0) return;
        for (std::size_t a = 0; a < 2 * n_; ++a) {
            const double za = sign(a);
            const double qai = za * zi * ki[a % n_];
            const double qaj = za * zj * kj[a % n_];
            gradient_[a] += qai * di + qaj * dj;
        }
    }

    const SvrConfig& config_;
    double gamma_;
    const Matrix& features_;
    std::size_t n_;
    std::vector<std::vector<double>> kernel_cache_;
    std::vector<double> x_;
    std::vector<double> p_;
    std::vector<double> box_;
    std::vector<double> gradient_;
    std::size_t iterations_ = 0;
};

} // namespace

SvrModel fit_svr(const SvrConfig& config, const Matrix& features, std::span<const double> targets,
                 std::span<const double> weights) {
    if (features.rows < 2) throw DataError("SVR fit requires at least 2 samples");
    if (targets.size() != features.rows || weights.size() != features.rows) {
        throw UsageError("SVR fit: targets/weights must match the feature rows");
    }
    for (double v : features.data) {
        if (!std::isfinite(v)) throw DataError("SVR fit: non-finite feature value");
    }
    for (double w : weights) {
        if (!(w > 0.0)) throw UsageError("SVR fit: sample weights must be positive");
    }
    if (config.C <= 0.0 || config.epsilon < 0.0) {
        throw UsageError("SVR fit requires C > 0 and epsilon >= 0");
    }

    const double gamma = config.gamma ? *config.gamma : default_gamma(features);
    SmoSolver solver(config, gamma, features, targets, weights);
    solver.solve();

    SvrModel model;
    model.kernel_kind = config.kernel;
    model.gamma = gamma;
    model.coef0 = config.coef0;
    model.bias = solver.bias();
    model.objective = solver.objective();
    model.iterations = solver.iterations();

    const auto beta = solver.beta();
    std::vector<std::size_t> sv_rows;
    for (std::size_t i = 0; i < beta.size(); ++i) {
        if (beta[i] != 0.0) sv_rows.push_back(i);
    }
    model.support_vectors = Matrix(sv_rows.size(), features.cols);
    model.dual_coeffs.reserve(sv_rows.size());
    for (std::size_t r = 0; r < sv_rows.size(); ++r) {
        const auto src = features.row(sv_rows[r]);
        std::copy(src.begin(), src.end(), model.support_vectors.row(r).begin());
        model.dual_coeffs.push_back(beta[sv_rows[r]]);
    }
    return model;
}

double predict(const SvrModel& model, std::span<const double> x) {
    if (model.support_vectors.rows > 0 && x.size() != model.support_vectors.cols) {
        throw UsageError("SVR predict: dimension mismatch");
    }
    double sum = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.rows; ++i) {
        sum += model.dual_coeffs[i] *
               kernel(model.kernel_kind, model.gamma, model.coef0, model.support_vectors.row(i), x);
    }
    return sum;
}

std::vector<double> predict(const SvrModel& model, const Matrix& features) {
    std::vector<double> out(features.rows);
    for (std::size_t r = 0; r < features.rows; ++r) out[r] = predict(model, features.row(r));
    return out;
}

void save_svr(const SvrModel& model, const std::string& path) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(model.kernel_kind));
    w.f64(model.gamma);
    w.f64(model.coef0);
    w.f64(model.bias);
    w.u64(model.support_vectors.rows);
    w.u64(model.support_vectors.cols);
    w.f64_array(model.support_vectors.data);
    w.f64_array(model.dual_coeffs);
    write_container(path, kSvrModelTag, w.bytes());
}

SvrModel load_svr(const std::string& path) {
    const std::string payload = read_container(path, kSvrModelTag);
    ByteReader r(payload);
    SvrModel model;
    model.kernel_kind = static_cast<KernelKind>(r.u8());
    model.gamma = r.f64();
    model.coef0 = r.f64();
    model.bias = r.f64();
    const std::size_t rows = r.u64();
    const std::size_t cols = r.u64();
    model.support_vectors.rows = rows;
    model.support_vectors.cols = cols;
    model.support_vectors.data = r.f64_array();
    model.dual_coeffs = r.f64_array();
    if (model.support_vectors.data.size() != rows * cols || model.dual_coeffs.size() != rows) {
        throw ModelIoError("support vector shape mismatch in " + path);
    }
    if (!r.exhausted()) throw ModelIoError("trailing bytes in " + path);
    return model;
}

} // namespace affectreg

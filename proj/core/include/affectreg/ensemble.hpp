#pragma once

#include "affectreg/corpus.hpp"
#include "affectreg/ffn.hpp"
#include "affectreg/svr.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace affectreg {

// One regressor in an averaging ensemble.
struct EnsembleMember {
    std::string path; // model file the member was loaded from
    double weight = 1.0;
    std::variant<FfnModel, SvrModel> model;

    double predict(std::span<const double> features) const;
    std::size_t input_dim() const;
};

struct EnsembleModel {
    std::string target;
    std::vector<EnsembleMember> members;
    std::optional<ValueScale> clip; // optional submission hygiene, off by default

    // Weighted mean of the member predictions.
    double predict(std::span<const double> features) const;
};

// Loads a model file of either type by its container tag.
EnsembleMember load_member(const std::string& path, double weight);

// Manifest JSON: {"target": ..., "members": [{"path": ..., "weight": ...}]}.
// Paths are resolved relative to the manifest's directory.
EnsembleModel load_ensemble(const std::string& manifest_path);
void write_ensemble_manifest(const std::string& manifest_path, const std::string& target,
                             const std::vector<std::pair<std::string, double>>& members);

} // namespace affectreg

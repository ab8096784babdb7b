#include "affectreg/ensemble.hpp"

#include "affectreg/errors.hpp"
#include "affectreg/matrix.hpp"
#include "affectreg/serialize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace affectreg {

double EnsembleMember::predict(std::span<const double> features) const {
    if (const auto* ffn = std::get_if<FfnModel>(&model)) {
        Matrix batch(1, features.size());
        std::copy(features.begin(), features.end(), batch.data.begin());
        return forward(*ffn, batch, false, nullptr, nullptr).front();
    }
    return affectreg::predict(std::get<SvrModel>(model), features);
}

std::size_t EnsembleMember::input_dim() const {
    if (const auto* ffn = std::get_if<FfnModel>(&model)) return ffn->input_dim();
    return std::get<SvrModel>(model).support_vectors.cols;
}

double EnsembleModel::predict(std::span<const double> features) const {
    if (members.empty()) throw UsageError("ensemble has no members");
    double weighted = 0.0, total = 0.0;
    for (const auto& member : members) {
        weighted += member.weight * member.predict(features);
        total += member.weight;
    }
    double value = weighted / total;
    if (clip) value = std::clamp(value, clip->min, clip->max);
    return value;
}

EnsembleMember load_member(const std::string& path, double weight) {
    EnsembleMember member;
    member.path = path;
    member.weight = weight;
    if (peek_container_tag(path) == kFfnModelTag) {
        member.model = load_ffn(path);
    } else {
        member.model = load_svr(path);
    }
    return member;
}

EnsembleModel load_ensemble(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open ensemble manifest: " + manifest_path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid ensemble manifest " + manifest_path + ": " + e.what());
    }
    EnsembleModel ensemble;
    ensemble.target = doc.value("target", std::string{});
    const auto base = std::filesystem::path(manifest_path).parent_path();
    for (const auto& entry : doc.at("members")) {
        const std::string rel = entry.at("path").get<std::string>();
        const double weight = entry.value("weight", 1.0);
        if (weight <= 0.0) throw DataError("non-positive member weight in " + manifest_path);
        const auto path = std::filesystem::path(rel).is_absolute()
                              ? std::filesystem::path(rel)
                              : base / rel;
        ensemble.members.push_back(load_member(path.string(), weight));
    }
    if (ensemble.members.empty()) throw DataError("ensemble manifest lists no members");
    return ensemble;
}

void write_ensemble_manifest(const std::string& manifest_path, const std::string& target,
                             const std::vector<std::pair<std::string, double>>& members) {
    nlohmann::json doc;
    doc["target"] = target;
    doc["members"] = nlohmann::json::array();
    for (const auto& [path, weight] : members) {
        doc["members"].push_back({{"path", path}, {"weight", weight}});
    }
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write ensemble manifest: " + manifest_path);
    out << doc.dump(2) << "\n";
}

} // namespace affectreg

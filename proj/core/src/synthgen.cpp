#include "coupled_labels/synthgen.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

#include "coupled_labels/losses.hpp"

namespace coupled_labels {

using json = nlohmann::json;

GenSpec default_gen_spec(std::uint64_t seed) {
    GenSpec spec;
    spec.planted_edges = {{0, 1, 2.0}, {2, 3, 2.0}, {4, 5, 2.0}};
    spec.seed = seed;
    return spec;
}

void validate_gen_spec(const GenSpec& spec) {
    if (spec.n < 1) throw ValidationError("gen spec: N must be >= 1");
    if (spec.d < 1) throw ValidationError("gen spec: D must be >= 1");
    if (spec.l < 2) throw ValidationError("gen spec: L must be >= 2");
    if (!std::isfinite(spec.noise_scale) || spec.noise_scale < 0.0)
        throw ValidationError("gen spec: noise_scale must be finite and >= 0");
    if (spec.base_weights) {
        if (static_cast<std::size_t>(spec.base_weights->rows()) != spec.d ||
            static_cast<std::size_t>(spec.base_weights->cols()) != spec.l)
            throw ValidationError("gen spec: base_weights must be D x L");
        if (!spec.base_weights->allFinite())
            throw ValidationError("gen spec: base_weights must be finite");
    }
    for (const auto& e : spec.planted_edges) {
        if (e.source >= spec.l || e.target >= spec.l)
            throw ValidationError("gen spec: planted edge label out of range");
        if (e.source == e.target) throw ValidationError("gen spec: planted edge is a self-loop");
        if (!std::isfinite(e.strength))
            throw ValidationError("gen spec: planted edge strength must be finite");
    }
    label_generation_order(spec);
}

std::vector<std::size_t> label_generation_order(const GenSpec& spec) {
    std::vector<std::size_t> indegree(spec.l, 0);
    for (const auto& e : spec.planted_edges) ++indegree[e.target];
    std::vector<std::size_t> order;
    std::vector<bool> done(spec.l, false);
    while (order.size() < spec.l) {
        std::size_t next = spec.l;
        for (std::size_t j = 0; j < spec.l && next == spec.l; ++j)
            if (!done[j] && indegree[j] == 0) next = j;
        if (next == spec.l) throw ValidationError("gen spec: planted edges contain a cycle");
        done[next] = true;
        order.push_back(next);
        for (const auto& e : spec.planted_edges)
            if (e.source == next) --indegree[e.target];
    }
    return order;
}

Matrix resolve_base_weights(const GenSpec& spec) {
    if (spec.base_weights) return *spec.base_weights;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(spec.d)));
    Matrix w(static_cast<Eigen::Index>(spec.d), static_cast<Eigen::Index>(spec.l));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    return w;
}

Dataset generate(const GenSpec& spec) {
    validate_gen_spec(spec);
    const auto order = label_generation_order(spec);
    const Matrix w = resolve_base_weights(spec);

    // Sampling uses its own stream so explicit and drawn weights see the
    // same example sequence for a given seed.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto n = static_cast<Eigen::Index>(spec.n);
    Dataset ds;
    ds.features.resize(n, static_cast<Eigen::Index>(spec.d));
    Matrix labels = Matrix::Zero(n, static_cast<Eigen::Index>(spec.l));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(i, c) = normal(rng);
        const RowVector base = ds.features.row(i) * w;
        for (const auto j : order) {
            double logit = base(static_cast<Eigen::Index>(j));
            for (const auto& e : spec.planted_edges)
                if (e.target == j) logit += e.strength * labels(i, static_cast<Eigen::Index>(e.source));
            logit += spec.noise_scale * normal(rng);
            labels(i, static_cast<Eigen::Index>(j)) = unit(rng) < sigmoid(logit) ? 1.0 : 0.0;
        }
    }
    ds.labels = LabelMatrix(std::move(labels));
    ds.feature_names = default_feature_names(spec.d);
    ds.label_names = default_label_names(spec.l);
    return ds;
}

namespace {

template <typename T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("gen spec field '") + key + "' has the wrong type");
    }
}

}  // namespace

GenSpec gen_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("gen spec: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("gen spec: top level must be an object");
    for (const auto& [key, value] : j.items())
        if (key != "N" && key != "D" && key != "L" && key != "base_weights" &&
            key != "planted_edges" && key != "noise_scale" && key != "seed")
            throw ValidationError("gen spec field '" + key + "' is not recognised");

    GenSpec spec;
    spec.n = field<std::size_t>(j, "N", spec.n);
    spec.d = field<std::size_t>(j, "D", spec.d);
    spec.l = field<std::size_t>(j, "L", spec.l);
    spec.noise_scale = field<double>(j, "noise_scale", spec.noise_scale);
    spec.seed = field<std::uint64_t>(j, "seed", spec.seed);
    if (j.contains("base_weights") && !j.at("base_weights").is_null()) {
        const auto rows = field<std::vector<std::vector<double>>>(j, "base_weights", {});
        Matrix w(static_cast<Eigen::Index>(rows.size()),
                 rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (static_cast<Eigen::Index>(rows[r].size()) != w.cols())
                throw ValidationError("gen spec: base_weights rows differ in length");
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        spec.base_weights = std::move(w);
    }
    if (j.contains("planted_edges")) {
        const auto& edges = j.at("planted_edges");
        if (!edges.is_array()) throw ValidationError("gen spec: planted_edges must be an array");
        for (const auto& e : edges) {
            if (!e.is_object()) throw ValidationError("gen spec: planted edge must be an object");
            for (const char* key : {"source", "target"})
                if (!e.contains(key))
                    throw ValidationError(std::string("gen spec: planted edge is missing '") + key + "'");
            PlantedEdge pe;
            pe.source = field<std::size_t>(e, "source", 0);
            pe.target = field<std::size_t>(e, "target", 0);
            pe.strength = field<double>(e, "strength", pe.strength);
            spec.planted_edges.push_back(pe);
        }
    }
    validate_gen_spec(spec);
    return spec;
}

std::string gen_spec_to_json(const GenSpec& spec) {
    json j = json::object();
    j["N"] = spec.n;
    j["D"] = spec.d;
    j["L"] = spec.l;
    j["noise_scale"] = spec.noise_scale;
    j["seed"] = spec.seed;
    json edges = json::array();
    for (const auto& e : spec.planted_edges)
        edges.push_back({{"source", e.source}, {"target", e.target}, {"strength", e.strength}});
    j["planted_edges"] = edges;
    if (spec.base_weights) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < spec.base_weights->rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < spec.base_weights->cols(); ++c)
                row.push_back((*spec.base_weights)(r, c));
            rows.push_back(row);
        }
        j["base_weights"] = rows;
    }
    return j.dump(2);
}

GenSpec load_gen_spec(const std::filesystem::path& path) {
    try {
        return gen_spec_from_json(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace coupled_labels

#include "coupled_labels/datamodel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coupled_labels/csv.hpp"

namespace coupled_labels {

using json = nlohmann::json;

namespace {

constexpr std::string_view kLabelPrefix = "label:";

}  // namespace

LabelMatrix::LabelMatrix(Matrix values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            const double v = values_(i, j);
            if (v != 0.0 && v != 1.0)
                throw ValidationError("label matrix entry (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ") is not 0 or 1");
        }
}

LabelMatrix LabelMatrix::select_rows(std::span<const std::size_t> rows) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), values_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
    LabelMatrix result;
    result.values_ = std::move(out);
    return result;
}

std::vector<std::size_t> LabelMatrix::positive_counts() const {
    std::vector<std::size_t> counts(cols(), 0);
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j)
            if (values_(i, j) != 0.0) ++counts[static_cast<std::size_t>(j)];
    return counts;
}

ProbMatrix::ProbMatrix(Matrix values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i)
        for (Eigen::Index j = 0; j < values_.cols(); ++j) {
            const double v = values_(i, j);
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("probability entry (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ") outside [0, 1]");
        }
}

LogitMatrix::LogitMatrix(Matrix values) : values_(std::move(values)) {
    if (!values_.allFinite()) throw ValidationError("logit matrix contains non-finite entries");
}

void Dataset::validate() const {
    if (features.rows() < 1) throw ValidationError("dataset: need at least one example");
    if (features.cols() < 1) throw ValidationError("dataset: need at least one feature");
    if (labels.cols() < 2) throw ValidationError("dataset: need at least two labels");
    if (labels.rows() != size())
        throw ValidationError("dataset: features have " + std::to_string(size()) +
                              " rows but labels have " + std::to_string(labels.rows()));
    if (feature_names.size() != num_features())
        throw ValidationError("dataset: feature name count does not match feature columns");
    if (label_names.size() != num_labels())
        throw ValidationError("dataset: label name count does not match label columns");
    if (!features.allFinite()) throw ValidationError("dataset: features must be finite");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= size()) throw ValidationError("dataset subset: row index out of range");
        out.features.row(static_cast<Eigen::Index>(r)) =
            features.row(static_cast<Eigen::Index>(rows[r]));
    }
    out.labels = labels.select_rows(rows);
    out.feature_names = feature_names;
    out.label_names = label_names;
    return out;
}

std::vector<std::string> default_feature_names(std::size_t d) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < d; ++i) names.push_back("f" + std::to_string(i));
    return names;
}

std::vector<std::string> default_label_names(std::size_t l) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < l; ++i) names.push_back("y" + std::to_string(i));
    return names;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset parse_dataset_csv(const std::string& text) {
    const auto lines = csv::split_lines(text);
    if (lines.empty()) throw ValidationError("dataset csv: missing header row");
    const auto header = csv::split_line(lines.front());

    Dataset ds;
    std::size_t first_label = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
        const bool is_label = header[c].starts_with(kLabelPrefix);
        if (is_label && first_label == header.size()) first_label = c;
        if (!is_label && first_label != header.size())
            throw ValidationError("dataset csv: feature column '" + header[c] +
                                  "' appears after label columns");
        if (is_label)
            ds.label_names.push_back(header[c].substr(kLabelPrefix.size()));
        else
            ds.feature_names.push_back(header[c]);
    }
    const auto d = ds.feature_names.size();
    const auto l = ds.label_names.size();
    const auto n = lines.size() - 1;

    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Matrix labels(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(l));
    for (std::size_t r = 0; r < n; ++r) {
        const auto fields = csv::split_line(lines[r + 1]);
        const std::string where = "dataset csv: row " + std::to_string(r);
        if (fields.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                                  " columns, found " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < d; ++c) {
            const auto v = csv::parse_double(fields[c]);
            if (!v || !std::isfinite(*v))
                throw ValidationError(where + ", column '" + header[c] + "': invalid number '" +
                                      fields[c] + "'");
            ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
        }
        for (std::size_t c = 0; c < l; ++c) {
            const auto& field = fields[d + c];
            double v = 0.0;
            if (field == "0") v = 0.0;
            else if (field == "1") v = 1.0;
            else
                throw ValidationError(where + ", column '" + header[d + c] + "': label value '" +
                                      field + "' is not 0 or 1");
            labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    ds.labels = LabelMatrix(std::move(labels));
    ds.validate();
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    try {
        return parse_dataset_csv(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::string dataset_to_csv(const Dataset& ds) {
    ds.validate();
    std::string out;
    for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
        if (c) out += ',';
        out += ds.feature_names[c];
    }
    for (const auto& name : ds.label_names) {
        out += ',';
        out += kLabelPrefix;
        out += name;
    }
    out += '\n';
    for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.features.cols(); ++j) {
            if (j) out += ',';
            out += csv::format_double(ds.features(i, j));
        }
        for (Eigen::Index j = 0; j < ds.labels.values().cols(); ++j) {
            out += ',';
            out += ds.labels.values()(i, j) != 0.0 ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    write_text_file(path, dataset_to_csv(dataset));
}

std::string to_string(LossKind kind) { return kind == LossKind::ASL ? "ASL" : "WeightedBCE"; }

std::string to_string(PredictorKind kind) {
    return kind == PredictorKind::Linear ? "linear" : "mlp1";
}

ExperimentConfig validate_config(const ExperimentConfig& cfg) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("config field '" + field + "' " + why);
    };
    if (cfg.K < 2) fail("K", "must be >= 2");
    if (!(cfg.alpha >= 0.0) || !std::isfinite(cfg.alpha)) fail("alpha", "must be finite and >= 0");
    if (!(cfg.lambda_l1 >= 0.0) || !std::isfinite(cfg.lambda_l1))
        fail("lambda_l1", "must be finite and >= 0");
    if (!(cfg.asl.clip >= 0.0 && cfg.asl.clip < 1.0)) fail("asl.clip", "must lie in [0, 1)");
    if (!(cfg.asl.gamma_pos >= 0.0) || !std::isfinite(cfg.asl.gamma_pos))
        fail("asl.gamma_pos", "must be finite and >= 0");
    if (!(cfg.asl.gamma_neg >= 0.0) || !std::isfinite(cfg.asl.gamma_neg))
        fail("asl.gamma_neg", "must be finite and >= 0");
    if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr)) fail("lr", "must be finite and > 0");
    if (!(cfg.weight_decay >= 0.0) || !std::isfinite(cfg.weight_decay))
        fail("weight_decay", "must be finite and >= 0");
    if (cfg.batch_size < 1) fail("batch_size", "must be >= 1");
    if (cfg.eval_batch_multiplier < 1) fail("eval_batch_multiplier", "must be >= 1");
    if (cfg.epochs < 1) fail("epochs", "must be >= 1");
    if (cfg.patience < 1) fail("patience", "must be >= 1");
    if (!(cfg.ema_decay > 0.0 && cfg.ema_decay < 1.0)) fail("ema_decay", "must lie in (0, 1)");
    if (!(cfg.grad_clip_norm > 0.0) || !std::isfinite(cfg.grad_clip_norm))
        fail("grad_clip_norm", "must be finite and > 0");
    if (cfg.predictor.hidden_width < 1) fail("predictor.hidden_width", "must be >= 1");
    if (!(cfg.predictor.dropout_p >= 0.0 && cfg.predictor.dropout_p < 1.0))
        fail("predictor.dropout_p", "must lie in [0, 1)");
    return cfg;
}

namespace {

template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + path + key + "' has the wrong type");
    }
}

void take_count(const json& obj, const char* key, std::size_t& out, const std::string& path) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError("config field '" + path + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& path) {
    for (const auto& [key, value] : obj.items()) {
        bool found = false;
        for (const char* k : known) found = found || key == k;
        if (!found) throw ValidationError("config field '" + path + key + "' is not recognised");
    }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = text.empty() ? json::object() : json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown(j,
                   {"K", "alpha", "lambda_l1", "loss_kind", "asl", "lr", "weight_decay",
                    "batch_size", "eval_batch_multiplier", "epochs", "patience", "ema_decay",
                    "grad_clip_norm", "seed", "refinement_enabled", "predictor"},
                   "");
    ExperimentConfig cfg;
    take_count(j, "K", cfg.K, "");
    take(j, "alpha", cfg.alpha, "");
    take(j, "lambda_l1", cfg.lambda_l1, "");
    if (j.contains("loss_kind")) {
        std::string kind;
        take(j, "loss_kind", kind, "");
        if (kind == "ASL") cfg.loss_kind = LossKind::ASL;
        else if (kind == "WeightedBCE") cfg.loss_kind = LossKind::WeightedBCE;
        else throw ValidationError("config field 'loss_kind' must be \"ASL\" or \"WeightedBCE\"");
    }
    if (j.contains("asl")) {
        const auto& a = j.at("asl");
        if (!a.is_object()) throw ValidationError("config field 'asl' must be an object");
        reject_unknown(a, {"gamma_pos", "gamma_neg", "clip"}, "asl.");
        take(a, "gamma_pos", cfg.asl.gamma_pos, "asl.");
        take(a, "gamma_neg", cfg.asl.gamma_neg, "asl.");
        take(a, "clip", cfg.asl.clip, "asl.");
    }
    take(j, "lr", cfg.lr, "");
    take(j, "weight_decay", cfg.weight_decay, "");
    take_count(j, "batch_size", cfg.batch_size, "");
    take_count(j, "eval_batch_multiplier", cfg.eval_batch_multiplier, "");
    take_count(j, "epochs", cfg.epochs, "");
    take_count(j, "patience", cfg.patience, "");
    take(j, "ema_decay", cfg.ema_decay, "");
    take(j, "grad_clip_norm", cfg.grad_clip_norm, "");
    if (j.contains("seed")) {
        const auto& v = j.at("seed");
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                       v.get<long long>() < 0))
            throw ValidationError("config field 'seed' must be a non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    take(j, "refinement_enabled", cfg.refinement_enabled, "");
    if (j.contains("predictor")) {
        const auto& p = j.at("predictor");
        if (!p.is_object()) throw ValidationError("config field 'predictor' must be an object");
        reject_unknown(p, {"variant", "hidden_width", "dropout_p"}, "predictor.");
        if (p.contains("variant")) {
            std::string v;
            take(p, "variant", v, "predictor.");
            if (v == "linear") cfg.predictor.variant = PredictorKind::Linear;
            else if (v == "mlp1") cfg.predictor.variant = PredictorKind::Mlp1;
            else throw ValidationError("config field 'predictor.variant' must be linear or mlp1");
        }
        take_count(p, "hidden_width", cfg.predictor.hidden_width, "predictor.");
        take(p, "dropout_p", cfg.predictor.dropout_p, "predictor.");
    }
    return validate_config(cfg);
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j = json::object();
    j["K"] = cfg.K;
    j["alpha"] = cfg.alpha;
    j["lambda_l1"] = cfg.lambda_l1;
    j["loss_kind"] = to_string(cfg.loss_kind);
    j["asl"] = {{"gamma_pos", cfg.asl.gamma_pos},
                {"gamma_neg", cfg.asl.gamma_neg},
                {"clip", cfg.asl.clip}};
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["batch_size"] = cfg.batch_size;
    j["eval_batch_multiplier"] = cfg.eval_batch_multiplier;
    j["epochs"] = cfg.epochs;
    j["patience"] = cfg.patience;
    j["ema_decay"] = cfg.ema_decay;
    j["grad_clip_norm"] = cfg.grad_clip_norm;
    j["seed"] = cfg.seed;
    j["refinement_enabled"] = cfg.refinement_enabled;
    j["predictor"] = {{"variant", to_string(cfg.predictor.variant)},
                      {"hidden_width", cfg.predictor.hidden_width},
                      {"dropout_p", cfg.predictor.dropout_p}};
    return j.dump(2);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    try {
        return config_from_json(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : config_to_json(cfg)) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace coupled_labels

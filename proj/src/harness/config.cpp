// SPDX-License-Identifier: Apache-2.0
#include "robustlab/harness/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <string_view>

#include "robustlab/error.hpp"

namespace robustlab::harness {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!j.is_object()) {
        throw ConfigError(std::string(where) + " must be an object");
    }
    const std::set<std::string_view> allowed(keys);
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
        }
    }
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(std::string("'") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::string get_string(const json& j, const char* key, std::string fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_string()) {
        throw ConfigError(std::string("'") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

double get_real(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number()) {
        throw ConfigError(std::string("'") + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

template <typename F>
auto parse_enum(F parse, const std::string& name) {
    try {
        return parse(name);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

TaskKind parse_task_name(const std::string& name) {
    if (name == "regression_teacher") {
        return TaskKind::regression_teacher;
    }
    if (name == "classification_blobs") {
        return TaskKind::classification_blobs;
    }
    throw ConfigError("unknown task '" + name + "'");
}

void parse_task(const json& j, ExperimentConfig& cfg) {
    if (j.is_string()) {
        cfg.task = parse_task_name(j.get<std::string>());
        return;
    }
    reject_unknown(j, "task", {"csv_dataset"});
    if (!j.contains("csv_dataset")) {
        throw ConfigError("task object must hold 'csv_dataset'");
    }
    const json& c = j.at("csv_dataset");
    reject_unknown(c, "csv_dataset", {"path", "target_begin", "target_count", "n_test", "classification"});
    if (!c.contains("path")) {
        throw ConfigError("csv_dataset needs 'path'");
    }
    cfg.task = TaskKind::csv_dataset;
    cfg.csv.path = get_string(c, "path", "");
    cfg.csv.target_begin = get_count(c, "target_begin", 0);
    cfg.csv.target_count = get_count(c, "target_count", 1);
    cfg.csv.n_test = get_count(c, "n_test", 0);
    cfg.csv.classification = get<bool>(c, "classification", false);
}

void parse_train(const json& j, ExperimentConfig& cfg, bool classification) {
    reject_unknown(j, "train",
                   {"method", "loss", "huber_delta", "lr", "batch_size", "epochs", "ramp_epochs", "optimizer",
                    "adam_beta1", "adam_beta2", "adam_eps", "clip_c", "seed", "hidden", "activation"});
    TrainConfig& t = cfg.train;
    if (j.contains("method")) {
        const json& m = j.at("method");
        std::vector<std::string> names;
        if (m.is_string()) {
            names.push_back(m.get<std::string>());
        } else if (m.is_array() && !m.empty()) {
            for (const auto& e : m) {
                if (!e.is_string()) {
                    throw ConfigError("'method' entries must be strings");
                }
                names.push_back(e.get<std::string>());
            }
        } else {
            throw ConfigError("'method' must be a string or a non-empty list");
        }
        cfg.methods.clear();
        for (const auto& n : names) {
            cfg.methods.push_back(parse_enum(parse_method, n));
        }
    }
    t.loss.kind = parse_enum(parse_loss_kind, get_string(j, "loss", classification ? "cross_entropy" : "mse"));
    t.loss.huber_delta = get_real(j, "huber_delta", t.loss.huber_delta);
    t.lr = get_real(j, "lr", t.lr);
    t.batch_size = get_count(j, "batch_size", t.batch_size);
    t.epochs = get_count(j, "epochs", t.epochs);
    t.ramp_epochs = get_count(j, "ramp_epochs", t.ramp_epochs);
    const std::string opt = get_string(j, "optimizer", "adam");
    if (opt == "adam") {
        t.optimizer.kind = OptimizerKind::adam;
    } else if (opt == "sgd") {
        t.optimizer.kind = OptimizerKind::sgd;
    } else {
        throw ConfigError("unknown optimizer '" + opt + "'");
    }
    t.optimizer.beta1 = get_real(j, "adam_beta1", t.optimizer.beta1);
    t.optimizer.beta2 = get_real(j, "adam_beta2", t.optimizer.beta2);
    t.optimizer.eps = get_real(j, "adam_eps", t.optimizer.eps);
    t.clip_c = get_real(j, "clip_c", t.clip_c);
    t.seed = get<std::uint64_t>(j, "seed", t.seed);
    if (j.contains("hidden")) {
        const json& h = j.at("hidden");
        if (!h.is_array()) {
            throw ConfigError("'hidden' must be a list of widths");
        }
        t.hidden.clear();
        for (const auto& w : h) {
            if (!w.is_number_integer() || w.get<long long>() <= 0) {
                throw ConfigError("'hidden' widths must be positive integers");
            }
            t.hidden.push_back(w.get<std::size_t>());
        }
    }
    const std::string act = get_string(j, "activation", "leaky_relu");
    if (act == "leaky_relu") {
        t.activation = Activation::leaky_relu;
    } else if (act == "identity") {
        t.activation = Activation::identity;
    } else {
        throw ConfigError("unknown activation '" + act + "'");
    }
}

}  // namespace

std::string_view to_string(TaskKind task) {
    switch (task) {
    case TaskKind::regression_teacher:
        return "regression_teacher";
    case TaskKind::classification_blobs:
        return "classification_blobs";
    case TaskKind::csv_dataset:
        return "csv_dataset";
    }
    return "?";
}

bool ExperimentConfig::classification() const {
    return task == TaskKind::classification_blobs || (task == TaskKind::csv_dataset && csv.classification);
}

void ExperimentConfig::validate() const {
    if (repeats < 1) {
        throw ConfigError("repeats must be >= 1");
    }
    if (methods.empty()) {
        throw ConfigError("at least one method is required");
    }
    if (task != TaskKind::csv_dataset) {
        if (n_train < 2 || n_test < 2) {
            throw ConfigError("n_train and n_test must be >= 2");
        }
        if (p < 1 || q < 1) {
            throw ConfigError("p and q must be >= 1");
        }
    }
    if (task == TaskKind::classification_blobs && q < 2) {
        throw ConfigError("classification needs q >= 2 classes");
    }
    if (classification() && train.loss.kind != LossKind::cross_entropy) {
        throw ConfigError("classification tasks train with cross_entropy");
    }
    if (!classification() && train.loss.kind == LossKind::cross_entropy) {
        throw ConfigError("cross_entropy needs a classification task");
    }
    const CorruptionKind kind = corruption.kind;
    const bool class_kind = kind == CorruptionKind::pairflip || kind == CorruptionKind::symmetric;
    if (classification() && kind != CorruptionKind::none && !class_kind) {
        throw ConfigError(std::string(robustlab::to_string(kind)) + " corruption applies to regression targets only");
    }
    if (!classification() && kind == CorruptionKind::symmetric) {
        throw ConfigError("symmetric corruption applies to classification targets only");
    }
    try {
        corruption.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const double tau = tau_max();
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw ConfigError("assumed_eps must lie in [0, 1)");
    }
    if (out_dir.empty()) {
        throw ConfigError("out_dir must not be empty");
    }
    for (Method m : methods) {
        TrainConfig t = train;
        t.method = m;
        t.drop_fraction = tau;
        if (task != TaskKind::csv_dataset) {
            t.validate(n_train);
        }
    }
}

ExperimentConfig parse_config(const json& j) {
    reject_unknown(j, "config",
                   {"task", "n_train", "n_test", "p", "q", "data_seed", "corruption", "train", "repeats",
                    "assumed_eps", "out_dir"});
    ExperimentConfig cfg;
    if (!j.contains("task")) {
        throw ConfigError("config needs 'task'");
    }
    parse_task(j.at("task"), cfg);
    cfg.n_train = get_count(j, "n_train", cfg.n_train);
    cfg.n_test = get_count(j, "n_test", cfg.n_test);
    cfg.p = get_count(j, "p", cfg.p);
    cfg.q = get_count(j, "q", cfg.q);
    cfg.data_seed = get<std::uint64_t>(j, "data_seed", cfg.data_seed);
    if (j.contains("corruption")) {
        const json& c = j.at("corruption");
        reject_unknown(c, "corruption", {"kind", "rate", "seed"});
        cfg.corruption.kind = parse_enum(parse_corruption_kind, get_string(c, "kind", "none"));
        cfg.corruption.rate = get_real(c, "rate", 0.0);
        cfg.corruption.seed = get<std::uint64_t>(c, "seed", 0);
    }
    parse_train(j.contains("train") ? j.at("train") : json::object(), cfg, cfg.classification());
    cfg.repeats = get_count(j, "repeats", cfg.repeats);
    if (j.contains("assumed_eps")) {
        cfg.assumed_eps = get_real(j, "assumed_eps", 0.0);
    }
    cfg.out_dir = get_string(j, "out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.task == TaskKind::csv_dataset) {
        j["task"] = {{"csv_dataset",
                      {{"path", cfg.csv.path},
                       {"target_begin", cfg.csv.target_begin},
                       {"target_count", cfg.csv.target_count},
                       {"n_test", cfg.csv.n_test},
                       {"classification", cfg.csv.classification}}}};
    } else {
        j["task"] = std::string(to_string(cfg.task));
    }
    j["n_train"] = cfg.n_train;
    j["n_test"] = cfg.n_test;
    j["p"] = cfg.p;
    j["q"] = cfg.q;
    j["data_seed"] = cfg.data_seed;
    j["corruption"] = {{"kind", std::string(to_string(cfg.corruption.kind))},
                       {"rate", cfg.corruption.rate},
                       {"seed", cfg.corruption.seed}};
    json methods = json::array();
    for (Method m : cfg.methods) {
        methods.push_back(std::string(to_string(m)));
    }
    const TrainConfig& t = cfg.train;
    j["train"] = {{"method", methods},
                  {"loss", std::string(to_string(t.loss.kind))},
                  {"huber_delta", t.loss.huber_delta},
                  {"lr", t.lr},
                  {"batch_size", t.batch_size},
                  {"epochs", t.epochs},
                  {"ramp_epochs", t.ramp_epochs},
                  {"optimizer", t.optimizer.kind == OptimizerKind::adam ? "adam" : "sgd"},
                  {"adam_beta1", t.optimizer.beta1},
                  {"adam_beta2", t.optimizer.beta2},
                  {"adam_eps", t.optimizer.eps},
                  {"clip_c", t.clip_c},
                  {"seed", t.seed},
                  {"hidden", t.hidden},
                  {"activation", t.activation == Activation::leaky_relu ? "leaky_relu" : "identity"}};
    j["repeats"] = cfg.repeats;
    if (cfg.assumed_eps) {
        j["assumed_eps"] = *cfg.assumed_eps;
    }
    j["out_dir"] = cfg.out_dir;
    return j;
}

}  // namespace robustlab::harness

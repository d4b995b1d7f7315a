#include "opnn/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "opnn/errors.hpp"

namespace opnn::pipeline {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& key, const std::string& why) {
    throw SchemaError("config field '" + key + "' " + why);
}

std::uint64_t get_natural(const json& j, const std::string& key, std::uint64_t min_value = 0) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) bad_field(key, "must be an integer");
    if (v.is_number_integer() && v.get<std::int64_t>() < 0) bad_field(key, "must be >= 0");
    const auto value = v.get<std::uint64_t>();
    if (value < min_value) bad_field(key, "must be >= " + std::to_string(min_value));
    return value;
}

double get_real(const json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number()) bad_field(key, "must be a number");
    return v.get<double>();
}

std::string get_string(const json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_string()) bad_field(key, "must be a string");
    return v.get<std::string>();
}

std::vector<std::size_t> get_natural_array(const json& j, const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) bad_field(key, "must be a non-empty array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
        if (!e.is_number_integer() && !e.is_number_unsigned())
            bad_field(key, "must contain only integers");
        if (e.is_number_integer() && e.get<std::int64_t>() < 1) bad_field(key, "entries must be >= 1");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("config must be a JSON object");

    static const std::vector<std::string> known = {
        "model",         "data",        "out",          "seed",        "epochs",
        "batch_size",    "learning_rate", "window",     "min_days",    "n_train_options",
        "rate",          "hidden_channels", "kernel_size", "dilations", "gru_hidden",
        "lstm_hidden"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw SchemaError("unknown config key '" + key + "'");

    for (const char* required : {"model", "data", "out", "seed"})
        if (!j.contains(required))
            throw SchemaError("missing config field '" + std::string(required) + "'");

    RunConfig config;
    config.model.kind = models::model_kind_from_string(get_string(j, "model"));
    config.data_path = get_string(j, "data");
    config.out_dir = get_string(j, "out");
    config.train.seed = get_natural(j, "seed");

    config.train.epochs = config.model.kind == models::ModelKind::CnnRnn ? 100 : 200;
    if (j.contains("epochs")) config.train.epochs = get_natural(j, "epochs", 1);
    if (j.contains("batch_size")) config.train.batch_size = get_natural(j, "batch_size", 1);
    if (j.contains("learning_rate")) {
        config.train.learning_rate = get_real(j, "learning_rate");
        if (!(config.train.learning_rate > 0.0)) bad_field("learning_rate", "must be > 0");
    }
    if (j.contains("window")) config.model.window = get_natural(j, "window", 1);
    if (j.contains("min_days")) config.min_days = get_natural(j, "min_days");
    if (j.contains("n_train_options")) config.n_train_options = get_natural(j, "n_train_options", 1);
    if (j.contains("rate")) config.rate = get_real(j, "rate");
    if (j.contains("hidden_channels"))
        config.model.hidden_channels = get_natural(j, "hidden_channels", 1);
    if (j.contains("kernel_size")) config.model.kernel_size = get_natural(j, "kernel_size", 1);
    if (j.contains("dilations")) config.model.dilations = get_natural_array(j, "dilations");
    if (j.contains("gru_hidden")) config.model.gru_hidden = get_natural_array(j, "gru_hidden");
    if (j.contains("lstm_hidden")) config.model.lstm_hidden = get_natural(j, "lstm_hidden", 1);
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw SchemaError(path + ": not valid JSON");
    return run_config_from_json(j);
}

nlohmann::json run_config_to_json(const RunConfig& config) {
    return json{{"model", models::to_string(config.model.kind)},
                {"data", config.data_path},
                {"out", config.out_dir},
                {"seed", config.train.seed},
                {"epochs", config.train.epochs},
                {"batch_size", config.train.batch_size},
                {"learning_rate", config.train.learning_rate},
                {"window", config.model.window},
                {"min_days", config.min_days},
                {"n_train_options", config.n_train_options},
                {"rate", config.rate},
                {"hidden_channels", config.model.hidden_channels},
                {"kernel_size", config.model.kernel_size},
                {"dilations", config.model.dilations},
                {"gru_hidden", config.model.gru_hidden},
                {"lstm_hidden", config.model.lstm_hidden}};
}

nlohmann::json norm_stats_to_json(const market::NormStatsList& stats) {
    std::vector<double> mean, std_dev;
    for (const auto& s : stats) {
        mean.push_back(s.mean);
        std_dev.push_back(s.std);
    }
    return json{{"mean", mean}, {"std", std_dev}};
}

market::NormStatsList norm_stats_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("mean") || !j.contains("std"))
        throw FormatError("norm_stats must carry 'mean' and 'std' arrays");
    const auto& mean = j.at("mean");
    const auto& std_dev = j.at("std");
    if (!mean.is_array() || !std_dev.is_array() || mean.size() != std_dev.size())
        throw FormatError("norm_stats 'mean' and 'std' must be arrays of equal length");

    market::NormStatsList stats;
    for (std::size_t i = 0; i < mean.size(); ++i)
        stats.push_back({mean[i].get<double>(), std_dev[i].get<double>()});
    return stats;
}

nlohmann::json checkpoint_header(const RunConfig& config, const market::NormStatsList& stats) {
    return json{{"config", run_config_to_json(config)}, {"norm_stats", norm_stats_to_json(stats)}};
}

RunConfig run_config_from_checkpoint_header(const nlohmann::json& header) {
    if (!header.is_object() || !header.contains("config"))
        throw FormatError("checkpoint header is missing the config echo");
    return run_config_from_json(header.at("config"));
}

market::SplitRecords prepare_split(const std::vector<market::OptionRecord>& records,
                                   const RunConfig& config) {
    auto filtered = market::filter_min_lifetime(records, config.min_days);
    if (filtered.empty())
        throw DataError("no option has at least " + std::to_string(config.min_days) +
                        " days of history");
    return market::split_by_option(filtered, config.n_train_options);
}

market::FeatureTensorSet window_records(const std::vector<market::OptionRecord>& records,
                                        const market::NormStatsList& stats, std::size_t window) {
    return market::build_windows(market::apply_normalization(records, stats), stats, window);
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::uint64_t hash = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& config_echo, const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_files, std::uint64_t seed) {
    json inputs = json::object();
    for (const auto& path : input_paths) {
        char digest[32];
        std::snprintf(digest, sizeof digest, "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(path)));
        inputs[path] = {{"fnv1a64", digest},
                        {"bytes", std::filesystem::file_size(path)}};
    }

    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

    const json manifest{{"command", command},     {"config", config_echo},
                        {"inputs", inputs},       {"outputs", output_files},
                        {"seed", seed},           {"created_utc", stamp}};

    const auto path = std::filesystem::path(out_dir) / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace opnn::pipeline

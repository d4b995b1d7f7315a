#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "opnn/market_data.hpp"
#include "opnn/models.hpp"
#include "opnn/training.hpp"

namespace opnn::pipeline {

// Everything a training run needs, read from one flat JSON config file.
// Required keys: model, data, out, seed. Optional keys with defaults:
// epochs (100 for cnn_rnn, 200 otherwise), batch_size 64, learning_rate 1e-4,
// window 10, min_days 20, n_train_options 600, rate 0.03, hidden_channels 16,
// kernel_size 3, dilations [1,2,4], gru_hidden [8,16,16], lstm_hidden 32.
struct RunConfig {
    models::ModelConfig model;
    std::string data_path;
    std::string out_dir;
    training::TrainConfig train;
    std::size_t min_days = 20;
    std::size_t n_train_options = 600;
    double rate = 0.03;
};

// Strict schema: unknown keys, wrong types, and missing required keys raise
// a schema error naming the field.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& config);

nlohmann::json norm_stats_to_json(const market::NormStatsList& stats);
market::NormStatsList norm_stats_from_json(const nlohmann::json& j);

// Checkpoint header: {"config": <run config echo>, "norm_stats": {...}}.
nlohmann::json checkpoint_header(const RunConfig& config, const market::NormStatsList& stats);
RunConfig run_config_from_checkpoint_header(const nlohmann::json& header);

// filter -> split with the config's thresholds; train split must be usable.
market::SplitRecords prepare_split(const std::vector<market::OptionRecord>& records,
                                   const RunConfig& config);

// normalize + window one split's records with the given stats.
market::FeatureTensorSet window_records(const std::vector<market::OptionRecord>& records,
                                        const market::NormStatsList& stats, std::size_t window);

std::uint64_t fnv1a64_file(const std::string& path);

// manifest.json next to the command's outputs: config echo, input digests,
// output file names, seed, UTC timestamp.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& config_echo, const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_files, std::uint64_t seed);

}  // namespace opnn::pipeline

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "opnn/market_data.hpp"
#include "opnn/models.hpp"
#include "opnn/params.hpp"

namespace opnn::training {

struct TrainConfig {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
};

struct EpochLog {
    std::size_t epoch;  // 1-based
    double train_mse;   // mean over the epoch's batches, sample-weighted
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Seeded mini-batch Adam over shuffled windows; the last partial batch is
// kept. Deterministic given (model seed, config seed, data).
std::vector<EpochLog> train(models::Model& model, const market::FeatureTensorSet& data,
                            const TrainConfig& config, const EpochCallback& on_epoch = {});

// epoch,<n>,train_mse,<value> per line.
void write_train_log(const std::vector<EpochLog>& log, const std::string& path);

struct Checkpoint {
    nlohmann::json header;  // model config echo + norm stats; schema owned by the pipeline
    ModelParams params;
};

// Binary layout: "OPNN", u32 version=1, u32 header length + UTF-8 JSON header,
// u32 parameter count, then per parameter: u16 name length + name, u8 rank,
// u32 per dim, values as little-endian IEEE-754 doubles. Everything little-endian.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Copies checkpoint parameters into the model; name-set or shape mismatch is
// an integrity error naming the parameter.
void restore_params(models::Model& model, const ModelParams& saved);

}  // namespace opnn::training

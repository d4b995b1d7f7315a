#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "opnn/market_data.hpp"
#include "opnn/params.hpp"
#include "opnn/tensor.hpp"

namespace opnn::models {

enum class ModelKind { ConvLstm3C, ConvLstm1C, CnnRnn, Lstm, BsBaseline };

// Accepts conv_lstm_3c, conv_lstm_1c, cnn_rnn, lstm, bs.
ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelConfig {
    ModelKind kind = ModelKind::ConvLstm3C;
    std::size_t window = market::kDefaultWindow;

    // conv_lstm_* / lstm
    std::size_t hidden_channels = 16;
    std::size_t kernel_size = 3;
    std::size_t lstm_hidden = 32;

    // cnn_rnn
    std::size_t conv_channels = 16;
    std::vector<std::size_t> dilations = {1, 2, 4};
    std::vector<std::size_t> gru_hidden = {8, 16, 16};  // per direction
    std::size_t regression_hidden = 16;
};

// Model-specific input layout produced by make_batch:
//   conv_lstm_3c: window tensors of (B, 3, 5)
//   conv_lstm_1c: window tensors of (B, 1, 15)
//   lstm:         window tensors of (B, 15)
//   cnn_rnn:      one tensor (B, 15, window), features over the time axis
struct Batch {
    std::vector<Tensor> inputs;
    Tensor targets;  // (B, 1), normalized
};

Batch make_batch(const ModelConfig& config, const market::FeatureTensorSet& set,
                 const std::vector<std::size_t>& indices);

class Model {
  public:
    virtual ~Model() = default;

    // Normalized prediction of shape (B, 1).
    virtual Tensor forward(const std::vector<Tensor>& inputs) = 0;

    const ModelConfig& config() const { return config_; }
    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }

    // Seeded construction; the bs baseline has no parameters and is not
    // constructible as a Model.
    static std::unique_ptr<Model> create(const ModelConfig& config, std::uint64_t seed);

  protected:
    explicit Model(ModelConfig config) : config_(std::move(config)) {}

    ModelConfig config_;
    ModelParams params_;
};

// Closed-form baseline: reprice each record from its own quoted fields.
double bs_baseline_predict(const market::OptionRecord& record, double rate);

}  // namespace opnn::models

#include "opnn/models.hpp"

#include <random>

#include "opnn/blackscholes.hpp"
#include "opnn/errors.hpp"
#include "opnn/ops.hpp"

namespace opnn::models {

namespace {

// Initialization policy: matmul weights use their input width as fan-in,
// conv kernels use in_channels * kernel_size (their bias too), and
// recurrent-cell biases and peepholes use the hidden width.
Tensor init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
    return uniform_fan_in_init(std::move(shape), fan_in, rng);
}

void require_step_shape(const Tensor& t, const std::vector<std::size_t>& expect,
                        const char* model) {
    if (t.shape() != expect)
        throw DimensionError(std::string(model) + " expects step shape " +
                             shape_to_string(expect) + ", got " + shape_to_string(t.shape()));
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "conv_lstm_3c") return ModelKind::ConvLstm3C;
    if (name == "conv_lstm_1c") return ModelKind::ConvLstm1C;
    if (name == "cnn_rnn") return ModelKind::CnnRnn;
    if (name == "lstm") return ModelKind::Lstm;
    if (name == "bs") return ModelKind::BsBaseline;
    throw UsageError("unknown model '" + name +
                     "' (expected conv_lstm_3c, conv_lstm_1c, cnn_rnn, lstm, or bs)");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::ConvLstm3C: return "conv_lstm_3c";
        case ModelKind::ConvLstm1C: return "conv_lstm_1c";
        case ModelKind::CnnRnn: return "cnn_rnn";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::BsBaseline: return "bs";
    }
    throw UsageError("unknown model kind");
}

Batch make_batch(const ModelConfig& config, const market::FeatureTensorSet& set,
                 const std::vector<std::size_t>& indices) {
    if (!set.inputs.defined() || set.inputs.ndim() != 4)
        throw DimensionError("feature tensor must have shape (T, C, N, D)");
    if (indices.empty()) throw UsageError("cannot build an empty batch");

    const auto& shape = set.inputs.shape();
    const std::size_t T = shape[0], C = shape[1], N = shape[2], D = shape[3];
    for (std::size_t idx : indices)
        if (idx >= N)
            throw UsageError("sample index " + std::to_string(idx) + " out of range (have " +
                             std::to_string(N) + " samples)");

    const std::size_t B = indices.size();
    const auto& in = set.inputs.values();
    auto value = [&](std::size_t t, std::size_t c, std::size_t n, std::size_t d) {
        return in[((t * C + c) * N + n) * D + d];
    };

    Batch batch;
    switch (config.kind) {
        case ModelKind::ConvLstm3C:
            for (std::size_t t = 0; t < T; ++t) {
                Tensor x({B, C, D});
                auto& xv = x.values();
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t d = 0; d < D; ++d)
                            xv[(b * C + c) * D + d] = value(t, c, indices[b], d);
                batch.inputs.push_back(std::move(x));
            }
            break;
        case ModelKind::ConvLstm1C:
            for (std::size_t t = 0; t < T; ++t) {
                Tensor x({B, 1, C * D});
                auto& xv = x.values();
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t d = 0; d < D; ++d)
                            xv[b * C * D + c * D + d] = value(t, c, indices[b], d);
                batch.inputs.push_back(std::move(x));
            }
            break;
        case ModelKind::Lstm:
            for (std::size_t t = 0; t < T; ++t) {
                Tensor x({B, C * D});
                auto& xv = x.values();
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t c = 0; c < C; ++c)
                        for (std::size_t d = 0; d < D; ++d)
                            xv[b * C * D + c * D + d] = value(t, c, indices[b], d);
                batch.inputs.push_back(std::move(x));
            }
            break;
        case ModelKind::CnnRnn: {
            Tensor x({B, C * D, T});
            auto& xv = x.values();
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t d = 0; d < D; ++d)
                        for (std::size_t t = 0; t < T; ++t)
                            xv[(b * C * D + c * D + d) * T + t] = value(t, c, indices[b], d);
            batch.inputs.push_back(std::move(x));
            break;
        }
        case ModelKind::BsBaseline:
            throw UsageError("bs baseline takes option records, not tensor batches");
    }

    batch.targets = Tensor({B, 1});
    auto& tv = batch.targets.values();
    const auto& targets = set.targets.values();
    for (std::size_t b = 0; b < B; ++b) tv[b] = targets[indices[b]];
    return batch;
}

// ---------------------------------------------------------------------------
// Conv-LSTM over a 1-D feature line. Both variants share the cell; they
// differ only in input channels and line width (3 x 5 vs 1 x 15).
// ---------------------------------------------------------------------------
class ConvLstmModel final : public Model {
  public:
    ConvLstmModel(ModelConfig config, std::uint64_t seed, std::size_t in_channels,
                  std::size_t width)
        : Model(std::move(config)), in_channels_(in_channels), width_(width) {
        const std::size_t H = config_.hidden_channels;
        const std::size_t k = config_.kernel_size;
        std::mt19937_64 rng(seed);

        auto gate = [&](const char* x_name, const char* h_name, const char* b_name) {
            params_[x_name] = init({H, in_channels_, k}, in_channels_ * k, rng);
            params_[h_name] = init({H, H, k}, H * k, rng);
            params_[b_name] = init({H}, in_channels_ * k, rng);
        };
        gate("wxi", "whi", "bi");
        params_["wci"] = init({H, width_}, H, rng);
        gate("wxf", "whf", "bf");
        params_["wcf"] = init({H, width_}, H, rng);
        gate("wxc", "whc", "bc");
        gate("wxo", "who", "bo");
        params_["wco"] = init({H, width_}, H, rng);
        params_["head.w"] = init({H * width_, 1}, H * width_, rng);
        params_["head.b"] = init({1}, H * width_, rng);

        zero_bias_ = Tensor::zeros({H});
    }

    Tensor forward(const std::vector<Tensor>& inputs) override {
        if (inputs.size() != config_.window)
            throw DimensionError("conv_lstm expects " + std::to_string(config_.window) +
                                 " input steps, got " + std::to_string(inputs.size()));
        const std::size_t B = inputs.front().shape().at(0);
        const std::size_t H = config_.hidden_channels;
        for (const auto& x : inputs) require_step_shape(x, {B, in_channels_, width_}, "conv_lstm");

        auto p = [&](const char* name) { return params_.at(name); };
        Tensor h = Tensor::zeros({B, H, width_});
        Tensor c = Tensor::zeros({B, H, width_});

        for (const Tensor& x : inputs) {
            auto xconv = [&](const char* w, const char* b) {
                return conv1d(x, p(w), p(b), 1, Padding::Same);
            };
            auto hconv = [&](const char* w) {
                return conv1d(h, p(w), zero_bias_, 1, Padding::Same);
            };
            Tensor gi = sigmoid(add(add(xconv("wxi", "bi"), hconv("whi")), mul_bcast(c, p("wci"))));
            Tensor gf = sigmoid(add(add(xconv("wxf", "bf"), hconv("whf")), mul_bcast(c, p("wcf"))));
            Tensor gc = tanh(add(xconv("wxc", "bc"), hconv("whc")));
            c = add(mul(gf, c), mul(gi, gc));
            Tensor go = sigmoid(add(add(xconv("wxo", "bo"), hconv("who")), mul_bcast(c, p("wco"))));
            h = mul(go, tanh(c));
        }

        Tensor flat = reshape(h, {B, H * width_});
        return add_bcast(matmul(flat, p("head.w")), p("head.b"));
    }

  private:
    std::size_t in_channels_;
    std::size_t width_;
    Tensor zero_bias_;  // recurrent convolutions carry no bias of their own
};

// ---------------------------------------------------------------------------
// Vector LSTM with peephole connections, hidden width 32 by default.
// ---------------------------------------------------------------------------
class LstmModel final : public Model {
  public:
    LstmModel(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
        const std::size_t in = market::kNumFeatures;
        const std::size_t H = config_.lstm_hidden;
        std::mt19937_64 rng(seed);

        auto gate = [&](const char* x_name, const char* h_name, const char* b_name) {
            params_[x_name] = init({in, H}, in, rng);
            params_[h_name] = init({H, H}, H, rng);
            params_[b_name] = init({H}, H, rng);
        };
        gate("wxi", "whi", "bi");
        params_["wci"] = init({H}, H, rng);
        gate("wxf", "whf", "bf");
        params_["wcf"] = init({H}, H, rng);
        gate("wxc", "whc", "bc");
        gate("wxo", "who", "bo");
        params_["wco"] = init({H}, H, rng);
        params_["head.w"] = init({H, 1}, H, rng);
        params_["head.b"] = init({1}, H, rng);
    }

    Tensor forward(const std::vector<Tensor>& inputs) override {
        if (inputs.size() != config_.window)
            throw DimensionError("lstm expects " + std::to_string(config_.window) +
                                 " input steps, got " + std::to_string(inputs.size()));
        const std::size_t B = inputs.front().shape().at(0);
        const std::size_t H = config_.lstm_hidden;
        for (const auto& x : inputs) require_step_shape(x, {B, market::kNumFeatures}, "lstm");

        auto p = [&](const char* name) { return params_.at(name); };
        Tensor h = Tensor::zeros({B, H});
        Tensor c = Tensor::zeros({B, H});

        for (const Tensor& x : inputs) {
            auto affine = [&](const char* wx, const char* wh, const char* b) {
                return add_bcast(add(matmul(x, p(wx)), matmul(h, p(wh))), p(b));
            };
            Tensor gi = sigmoid(add(affine("wxi", "whi", "bi"), mul_bcast(c, p("wci"))));
            Tensor gf = sigmoid(add(affine("wxf", "whf", "bf"), mul_bcast(c, p("wcf"))));
            Tensor gc = tanh(affine("wxc", "whc", "bc"));
            c = add(mul(gf, c), mul(gi, gc));
            Tensor go = sigmoid(add(affine("wxo", "who", "bo"), mul_bcast(c, p("wco"))));
            h = mul(go, tanh(c));
        }
        return add_bcast(matmul(h, p("head.w")), p("head.b"));
    }
};

// ---------------------------------------------------------------------------
// CNN + RNN: dilated convolutions over the window axis, a stack of
// bidirectional GRUs, then a unidirectional GRU feeding the linear head.
// ---------------------------------------------------------------------------
class CnnRnnModel final : public Model {
  public:
    CnnRnnModel(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
        if (config_.dilations.empty()) throw UsageError("cnn_rnn needs at least one dilation");
        if (config_.gru_hidden.empty()) throw UsageError("cnn_rnn needs at least one GRU layer");

        const std::size_t in_ch = market::kNumFeatures;
        const std::size_t cc = config_.conv_channels;
        const std::size_t k = config_.kernel_size;
        std::mt19937_64 rng(seed);

        for (std::size_t d : config_.dilations) {
            const std::string base = "spatial.d" + std::to_string(d);
            params_[base + ".w"] = init({cc, in_ch, k}, in_ch * k, rng);
            params_[base + ".b"] = init({cc}, in_ch * k, rng);
        }
        const std::size_t merged_in = cc * config_.dilations.size();
        params_["spatial.merge.w"] = init({cc, merged_in, 1}, merged_in, rng);
        params_["spatial.merge.b"] = init({cc}, merged_in, rng);

        std::size_t width = cc;
        for (std::size_t l = 0; l < config_.gru_hidden.size(); ++l) {
            const std::size_t H = config_.gru_hidden[l];
            for (const char* dir : {"fwd", "bwd"})
                make_gru("temporal.gru" + std::to_string(l + 1) + "." + dir, width, H, rng);
            width = 2 * H;
        }
        make_gru("regression.gru", width, config_.regression_hidden, rng);
        params_["head.w"] = init({config_.regression_hidden, 1}, config_.regression_hidden, rng);
        params_["head.b"] = init({1}, config_.regression_hidden, rng);
    }

    Tensor forward(const std::vector<Tensor>& inputs) override {
        if (inputs.size() != 1)
            throw DimensionError("cnn_rnn expects a single (B, features, window) input");
        const Tensor& x = inputs.front();
        const std::size_t B = x.shape().at(0);
        require_step_shape(x, {B, market::kNumFeatures, config_.window}, "cnn_rnn");

        auto p = [&](const std::string& name) { return params_.at(name); };

        // Spatial: parallel dilated conv blocks, concatenated, then merged.
        std::vector<Tensor> blocks;
        for (std::size_t d : config_.dilations) {
            const std::string base = "spatial.d" + std::to_string(d);
            blocks.push_back(
                tanh(conv1d(x, p(base + ".w"), p(base + ".b"), d, Padding::Same)));
        }
        Tensor merged = tanh(conv1d(concat(blocks, 1), p("spatial.merge.w"),
                                    p("spatial.merge.b"), 1, Padding::Same));

        // Window-axis slices become the GRU step sequence.
        const std::size_t T = config_.window;
        std::vector<Tensor> seq;
        seq.reserve(T);
        for (std::size_t t = 0; t < T; ++t)
            seq.push_back(reshape(slice(merged, 2, t, t + 1), {B, config_.conv_channels}));

        for (std::size_t l = 0; l < config_.gru_hidden.size(); ++l)
            seq = bidirectional_layer(seq, "temporal.gru" + std::to_string(l + 1),
                                      config_.gru_hidden[l], B);

        Tensor h = Tensor::zeros({B, config_.regression_hidden});
        for (const Tensor& step : seq) h = gru_step(step, h, "regression.gru");
        return add_bcast(matmul(h, p("head.w")), p("head.b"));
    }

  private:
    void make_gru(const std::string& prefix, std::size_t in, std::size_t H,
                  std::mt19937_64& rng) {
        auto gate = [&](const char* g) {
            params_[prefix + ".w" + g] = init({in, H}, in, rng);
            params_[prefix + ".u" + g] = init({H, H}, H, rng);
            params_[prefix + ".b" + g] = init({H}, H, rng);
        };
        gate("z");
        gate("r");
        gate("n");
    }

    Tensor gru_step(const Tensor& x, const Tensor& h, const std::string& prefix) {
        auto p = [&](const char* suffix) { return params_.at(prefix + suffix); };
        Tensor z = sigmoid(add_bcast(add(matmul(x, p(".wz")), matmul(h, p(".uz"))), p(".bz")));
        Tensor r = sigmoid(add_bcast(add(matmul(x, p(".wr")), matmul(h, p(".ur"))), p(".br")));
        Tensor n =
            tanh(add_bcast(add(matmul(x, p(".wn")), matmul(mul(r, h), p(".un"))), p(".bn")));
        return add(sub(h, mul(z, h)), mul(z, n));  // (1 - z) * h + z * n
    }

    std::vector<Tensor> bidirectional_layer(const std::vector<Tensor>& seq,
                                            const std::string& prefix, std::size_t H,
                                            std::size_t B) {
        const std::size_t T = seq.size();
        std::vector<Tensor> fwd(T), bwd(T);
        Tensor h = Tensor::zeros({B, H});
        for (std::size_t t = 0; t < T; ++t) {
            h = gru_step(seq[t], h, prefix + ".fwd");
            fwd[t] = h;
        }
        h = Tensor::zeros({B, H});
        for (std::size_t t = T; t-- > 0;) {
            h = gru_step(seq[t], h, prefix + ".bwd");
            bwd[t] = h;
        }
        std::vector<Tensor> out(T);
        for (std::size_t t = 0; t < T; ++t) out[t] = concat({fwd[t], bwd[t]}, 1);
        return out;
    }
};

std::unique_ptr<Model> Model::create(const ModelConfig& config, std::uint64_t seed) {
    if (config.window == 0) throw UsageError("window must be positive");
    if (config.kernel_size == 0) throw UsageError("kernel_size must be positive");

    switch (config.kind) {
        case ModelKind::ConvLstm3C:
            if (config.hidden_channels == 0) throw UsageError("hidden_channels must be positive");
            return std::make_unique<ConvLstmModel>(config, seed, market::kNumChannels,
                                                   market::kFeaturesPerChannel);
        case ModelKind::ConvLstm1C:
            if (config.hidden_channels == 0) throw UsageError("hidden_channels must be positive");
            return std::make_unique<ConvLstmModel>(config, seed, 1, market::kNumFeatures);
        case ModelKind::CnnRnn:
            return std::make_unique<CnnRnnModel>(config, seed);
        case ModelKind::Lstm:
            if (config.lstm_hidden == 0) throw UsageError("lstm_hidden must be positive");
            return std::make_unique<LstmModel>(config, seed);
        case ModelKind::BsBaseline:
            throw UsageError("bs baseline has no trainable parameters; use it with evaluate only");
    }
    throw UsageError("unknown model kind");
}

double bs_baseline_predict(const market::OptionRecord& record, double rate) {
    bs::BsInputs inp;
    inp.spot = record.spot;
    inp.strike = record.strike;
    inp.days_to_expire = record.days_to_expire;
    inp.rate = rate;
    inp.vol = record.implied_vol;
    inp.kind = record.call_put;
    return bs::bs_price(inp);
}

}  // namespace opnn::models

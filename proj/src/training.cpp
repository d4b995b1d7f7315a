#include "opnn/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "opnn/adam.hpp"
#include "opnn/errors.hpp"
#include "opnn/ops.hpp"

namespace opnn::training {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::vector<EpochLog> train(models::Model& model, const market::FeatureTensorSet& data,
                            const TrainConfig& config, const EpochCallback& on_epoch) {
    if (config.epochs == 0) throw UsageError("epochs must be >= 1");
    if (config.batch_size == 0) throw UsageError("batch_size must be >= 1");
    const std::size_t n = data.num_samples();
    if (n == 0) throw UsageError("training data has no samples");

    std::mt19937_64 shuffle_rng(config.seed);
    Adam optimizer({config.learning_rate});
    Tape& tape = Tape::active();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochLog> log;
    log.reserve(config.epochs);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
            const std::size_t stop = std::min(start + config.batch_size, n);
            std::vector<std::size_t> indices(order.begin() + start, order.begin() + stop);

            models::Batch batch = models::make_batch(model.config(), data, indices);
            tape.clear();
            Tensor pred = model.forward(batch.inputs);
            Tensor loss = mse_loss(pred, batch.targets);

            const double loss_value = loss.item();
            if (!std::isfinite(loss_value))
                throw TrainingError("non-finite training loss at epoch " +
                                    std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_no) + ": " +
                                    std::to_string(loss_value));
            loss_sum += loss_value * static_cast<double>(indices.size());

            zero_grads(model.params());
            backward(loss);
            optimizer.step(model.params());
            tape.clear();
        }

        EpochLog entry{epoch, loss_sum / static_cast<double>(n)};
        log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return log;
}

void write_train_log(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& entry : log)
        out << "epoch," << entry.epoch << ",train_mse," << format_number(entry.train_mse) << '\n';
    if (!out) throw IoError("failed writing " + path);
}

namespace {

constexpr char kMagic[4] = {'O', 'P', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
  public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(byte() | (byte() << 8)); }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
        return v;
    }

    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(byte()) << (8 * i);
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }

    std::string raw(std::size_t count) {
        if (pos_ + count > bytes_.size()) truncated();
        std::string s = bytes_.substr(pos_, count);
        pos_ += count;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

    [[noreturn]] void truncated() const {
        throw FormatError(path_ + ": truncated checkpoint");
    }

  private:
    std::uint32_t byte() {
        if (pos_ >= bytes_.size()) truncated();
        return static_cast<unsigned char>(bytes_[pos_++]);
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof kMagic);
    put_u32(out, kVersion);

    const std::string header = checkpoint.header.dump();
    if (header.size() > 0xffffffffu) throw FormatError("checkpoint header too large");
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;

    put_u32(out, static_cast<std::uint32_t>(checkpoint.params.size()));
    for (const auto& [name, tensor] : checkpoint.params) {
        if (name.empty() || name.size() > 0xffffu)
            throw FormatError("parameter name length out of range: '" + name + "'");
        if (tensor.ndim() > 0xff)
            throw FormatError("parameter rank out of range: " + name);
        put_u16(out, static_cast<std::uint16_t>(name.size()));
        out += name;
        out.push_back(static_cast<char>(tensor.ndim()));
        for (std::size_t dim : tensor.shape()) put_u32(out, static_cast<std::uint32_t>(dim));
        for (double v : tensor.values()) put_f64(out, v);
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot write " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader in(std::move(bytes), path);
    if (in.raw(4) != std::string(kMagic, sizeof kMagic))
        throw FormatError(path + ": not a checkpoint file (bad magic)");
    const std::uint32_t version = in.u32();
    if (version != kVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint checkpoint;
    const std::uint32_t header_len = in.u32();
    const std::string header = in.raw(header_len);
    checkpoint.header = nlohmann::json::parse(header, nullptr, false);
    if (checkpoint.header.is_discarded())
        throw FormatError(path + ": checkpoint header is not valid JSON");

    const std::uint32_t n_params = in.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::uint16_t name_len = in.u16();
        if (name_len == 0) throw FormatError(path + ": empty parameter name");
        const std::string name = in.raw(name_len);

        const std::uint32_t rank = static_cast<unsigned char>(in.raw(1)[0]);
        std::vector<std::size_t> shape(rank);
        std::size_t numel = 1;
        for (auto& dim : shape) {
            dim = in.u32();
            if (dim == 0) throw FormatError(path + ": zero dimension in parameter " + name);
            numel *= dim;
        }
        std::vector<double> values(numel);
        for (auto& v : values) v = in.f64();

        if (!checkpoint.params.emplace(name, Tensor(std::move(shape), std::move(values), true))
                 .second)
            throw FormatError(path + ": duplicate parameter " + name);
    }
    if (!in.exhausted()) throw FormatError(path + ": trailing bytes after last parameter");
    return checkpoint;
}

void restore_params(models::Model& model, const ModelParams& saved) {
    ModelParams& live = model.params();
    for (const auto& [name, tensor] : saved)
        if (!live.count(name))
            throw IntegrityError("checkpoint parameter '" + name + "' does not exist in a " +
                                 models::to_string(model.config().kind) + " model");
    for (auto& [name, tensor] : live) {
        auto it = saved.find(name);
        if (it == saved.end())
            throw IntegrityError("checkpoint is missing parameter '" + name + "'");
        if (it->second.shape() != tensor.shape())
            throw IntegrityError("checkpoint parameter '" + name + "' has shape " +
                                 shape_to_string(it->second.shape()) + ", model expects " +
                                 shape_to_string(tensor.shape()));
        tensor.values() = it->second.values();
    }
}

}  // namespace opnn::training

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "opnn/blackscholes.hpp"
#include "opnn/tensor.hpp"

namespace opnn::market {

inline constexpr std::size_t kNumChannels = 3;
inline constexpr std::size_t kFeaturesPerChannel = 5;
inline constexpr std::size_t kNumFeatures = kNumChannels * kFeaturesPerChannel;
inline constexpr std::size_t kDefaultWindow = 10;

// One option on one trading day: 15 features in 3 channels plus the
// settle-price target.
struct OptionRecord {
    std::string date;  // ISO-8601 YYYY-MM-DD
    std::string option_id;

    // channel 1, fundamental
    double spot = 0.0;
    double strike = 0.0;
    double days_to_expire = 0.0;
    bs::OptionKind call_put = bs::OptionKind::Call;
    double implied_vol = 0.0;

    // channel 2, price
    double prev_settle = 0.0;
    double settle_change = 0.0;
    double theory_price = 0.0;
    double theory_margin = 0.0;
    double inventory = 0.0;

    // channel 3, Greeks
    double delta = 0.0;
    double gamma = 0.0;
    double theta = 0.0;
    double vega = 0.0;
    double rho = 0.0;

    double settle = 0.0;  // target

    // Features in the fixed channel order; call_put encoded +1 / -1.
    std::array<double, kNumFeatures> features() const;
};

struct NormStats {
    double mean = 0.0;
    double std = 0.0;  // population (1/n); divide by max(std, 1e-8)
};

// 15 feature stats in channel order followed by the target stats.
using NormStatsList = std::vector<NormStats>;

struct SampleKey {
    std::string option_id;
    std::string date;  // target date
};

// Windowed dataset: inputs (T=10, C=3, N, D=5), targets (N, 1).
struct FeatureTensorSet {
    Tensor inputs;
    Tensor targets;
    NormStatsList norm_stats;
    std::vector<SampleKey> option_index;

    std::size_t window = kDefaultWindow;
    std::size_t num_samples() const { return option_index.size(); }
};

// CSV schema: header row naming all 18 columns (order free), comma-separated,
// UTF-8, call_put in {C, P}, date ISO-8601.
extern const std::array<const char*, 18> kCsvColumns;

std::vector<OptionRecord> load_csv(const std::string& path);
void save_csv(const std::vector<OptionRecord>& records, const std::string& path);

// Options with at least min_days distinct dates survive; order preserved.
std::vector<OptionRecord> filter_min_lifetime(const std::vector<OptionRecord>& records,
                                              std::size_t min_days = 20);

struct SplitRecords {
    std::vector<OptionRecord> train;
    std::vector<OptionRecord> test;
};

// Orders options by first trading date (ties by option_id) and sends the
// first n_train_options entire histories to train, the rest to test.
SplitRecords split_by_option(const std::vector<OptionRecord>& records, std::size_t n_train_options = 600);

// Record after z-scoring: the 15 features in channel order plus the target.
struct NormalizedRecord {
    std::string date;
    std::string option_id;
    std::array<double, kNumFeatures> features{};
    double target = 0.0;
};

// Per-feature population mean/std over the training records only.
NormStatsList fit_normalization(const std::vector<OptionRecord>& train_records);

// (x - mean) / max(std, 1e-8) applied to all 15 features and the target.
std::vector<NormalizedRecord> apply_normalization(const std::vector<OptionRecord>& records,
                                                  const NormStatsList& stats);

double denormalize_target(double normalized, const NormStatsList& stats);

// Assembles per-option sliding windows: an option with L days contributes
// max(0, L - window + 1) samples; the target day is the window's last day.
FeatureTensorSet build_windows(const std::vector<NormalizedRecord>& records,
                               const NormStatsList& stats, std::size_t window = kDefaultWindow);

struct GbmConfig {
    double s0 = 2.5;
    double mu = 0.05;
    double sigma = 0.2;
};

struct SyntheticConfig {
    std::size_t n_options = 200;
    std::size_t days_per_option = 60;
    GbmConfig gbm;
    double rate = 0.03;
    double noise_std = 0.0;  // relative noise on the settle price
    std::uint64_t seed = 0;
};

// Deterministic synthetic dataset: one GBM underlying path, one option
// starting per day, settle = theory price plus relative Gaussian noise,
// implied vol recovered from the noisy settle, Greeks from that vol.
std::vector<OptionRecord> generate_synthetic(const SyntheticConfig& config);

}  // namespace opnn::market

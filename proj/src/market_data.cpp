#include "opnn/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "opnn/errors.hpp"

namespace opnn::market {

namespace {

constexpr double kSigmaFloor = 1e-8;

std::string trimmed(std::string_view s) {
    auto begin = s.find_first_not_of(" \t");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trimmed(line.substr(start)));
            return out;
        }
        out.push_back(trimmed(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& what) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

double parse_number(const std::string& field, const std::string& path, std::size_t line_no,
                    const char* column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value))
        fail_line(path, line_no, std::string("cannot parse ") + column + " value '" + field + "'");
    return value;
}

bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

const std::array<const char*, 18> kCsvColumns = {
    "date",          "option_id",     "spot",        "strike", "days_to_expire", "call_put",
    "implied_vol",   "prev_settle",   "settle_change", "theory_price", "theory_margin",
    "inventory",     "delta",         "gamma",       "theta",  "vega",           "rho",
    "settle"};

std::array<double, kNumFeatures> OptionRecord::features() const {
    return {spot,        strike,        days_to_expire,
            call_put == bs::OptionKind::Call ? 1.0 : -1.0,
            implied_vol, prev_settle,   settle_change,
            theory_price, theory_margin, inventory,
            delta,       gamma,         theta,
            vega,        rho};
}

std::vector<OptionRecord> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_fields(line);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!position.emplace(header[i], i).second)
            throw SchemaError(path + ": duplicate column '" + header[i] + "'");
    }
    for (const char* name : kCsvColumns) {
        if (!position.count(name)) throw SchemaError(path + ": missing column '" + name + "'");
    }
    if (header.size() != kCsvColumns.size()) {
        for (const auto& name : header) {
            if (std::find_if(kCsvColumns.begin(), kCsvColumns.end(), [&](const char* c) {
                    return name == c;
                }) == kCsvColumns.end())
                throw SchemaError(path + ": unknown column '" + name + "'");
        }
    }
    auto col = [&](const char* name) { return position.at(name); };

    std::vector<OptionRecord> records;
    std::unordered_set<std::string> seen_keys;
    std::unordered_map<std::string, std::string> last_date;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        auto fields = split_fields(line);
        if (fields.size() != header.size())
            fail_line(path, line_no,
                      "expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()));

        OptionRecord rec;
        rec.date = fields[col("date")];
        rec.option_id = fields[col("option_id")];
        if (!valid_iso_date(rec.date))
            fail_line(path, line_no, "invalid date '" + rec.date + "' (expected YYYY-MM-DD)");
        if (rec.option_id.empty()) fail_line(path, line_no, "empty option_id");

        const std::string& cp = fields[col("call_put")];
        if (cp == "C")
            rec.call_put = bs::OptionKind::Call;
        else if (cp == "P")
            rec.call_put = bs::OptionKind::Put;
        else
            fail_line(path, line_no, "call_put must be C or P, got '" + cp + "'");

        auto num = [&](const char* name) {
            return parse_number(fields[col(name)], path, line_no, name);
        };
        rec.spot = num("spot");
        rec.strike = num("strike");
        rec.days_to_expire = num("days_to_expire");
        rec.implied_vol = num("implied_vol");
        rec.prev_settle = num("prev_settle");
        rec.settle_change = num("settle_change");
        rec.theory_price = num("theory_price");
        rec.theory_margin = num("theory_margin");
        rec.inventory = num("inventory");
        rec.delta = num("delta");
        rec.gamma = num("gamma");
        rec.theta = num("theta");
        rec.vega = num("vega");
        rec.rho = num("rho");
        rec.settle = num("settle");

        if (rec.spot <= 0.0) fail_line(path, line_no, "spot must be positive");
        if (rec.strike <= 0.0) fail_line(path, line_no, "strike must be positive");
        if (rec.days_to_expire < 0.0) fail_line(path, line_no, "days_to_expire must be >= 0");

        std::string key = rec.option_id + '\n' + rec.date;
        if (!seen_keys.insert(std::move(key)).second)
            fail_line(path, line_no, "duplicate (option_id, date) pair " + rec.option_id + ", " + rec.date);
        auto [it, inserted] = last_date.try_emplace(rec.option_id, rec.date);
        if (!inserted) {
            if (rec.date <= it->second)
                fail_line(path, line_no, "dates for " + rec.option_id + " not strictly increasing");
            it->second = rec.date;
        }

        records.push_back(std::move(rec));
    }
    return records;
}

void save_csv(const std::vector<OptionRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    for (std::size_t i = 0; i < kCsvColumns.size(); ++i)
        out << (i ? "," : "") << kCsvColumns[i];
    out << '\n';

    for (const auto& r : records) {
        out << r.date << ',' << r.option_id << ',' << format_number(r.spot) << ','
            << format_number(r.strike) << ',' << format_number(r.days_to_expire) << ','
            << (r.call_put == bs::OptionKind::Call ? 'C' : 'P') << ','
            << format_number(r.implied_vol) << ',' << format_number(r.prev_settle) << ','
            << format_number(r.settle_change) << ',' << format_number(r.theory_price) << ','
            << format_number(r.theory_margin) << ',' << format_number(r.inventory) << ','
            << format_number(r.delta) << ',' << format_number(r.gamma) << ','
            << format_number(r.theta) << ',' << format_number(r.vega) << ','
            << format_number(r.rho) << ',' << format_number(r.settle) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

std::vector<OptionRecord> filter_min_lifetime(const std::vector<OptionRecord>& records,
                                              std::size_t min_days) {
    std::unordered_map<std::string, std::unordered_set<std::string>> dates;
    for (const auto& r : records) dates[r.option_id].insert(r.date);

    std::vector<OptionRecord> out;
    for (const auto& r : records)
        if (dates.at(r.option_id).size() >= min_days) out.push_back(r);
    return out;
}

SplitRecords split_by_option(const std::vector<OptionRecord>& records, std::size_t n_train_options) {
    std::map<std::string, std::string> first_date;  // option_id -> earliest date
    for (const auto& r : records) {
        auto [it, inserted] = first_date.try_emplace(r.option_id, r.date);
        if (!inserted && r.date < it->second) it->second = r.date;
    }

    if (n_train_options == 0) throw UsageError("train split needs at least one option");
    if (n_train_options >= first_date.size())
        throw UsageError("train split of " + std::to_string(n_train_options) +
                         " options leaves an empty split (dataset has " +
                         std::to_string(first_date.size()) + " options, none left for test)");

    std::vector<std::pair<std::string, std::string>> order;  // (first_date, option_id)
    order.reserve(first_date.size());
    for (const auto& [id, date] : first_date) order.emplace_back(date, id);
    std::sort(order.begin(), order.end());

    std::unordered_set<std::string> train_ids;
    for (std::size_t i = 0; i < n_train_options; ++i) train_ids.insert(order[i].second);

    SplitRecords split;
    for (const auto& r : records)
        (train_ids.count(r.option_id) ? split.train : split.test).push_back(r);
    return split;
}

NormStatsList fit_normalization(const std::vector<OptionRecord>& train_records) {
    if (train_records.empty()) throw UsageError("cannot fit normalization on an empty record set");

    const std::size_t n_cols = kNumFeatures + 1;
    const double n = static_cast<double>(train_records.size());

    std::vector<double> sums(n_cols, 0.0);
    for (const auto& r : train_records) {
        auto f = r.features();
        for (std::size_t i = 0; i < kNumFeatures; ++i) sums[i] += f[i];
        sums[kNumFeatures] += r.settle;
    }

    NormStatsList stats(n_cols);
    for (std::size_t i = 0; i < n_cols; ++i) stats[i].mean = sums[i] / n;

    std::vector<double> sq(n_cols, 0.0);
    for (const auto& r : train_records) {
        auto f = r.features();
        for (std::size_t i = 0; i < kNumFeatures; ++i) {
            double d = f[i] - stats[i].mean;
            sq[i] += d * d;
        }
        double d = r.settle - stats[kNumFeatures].mean;
        sq[kNumFeatures] += d * d;
    }
    for (std::size_t i = 0; i < n_cols; ++i) stats[i].std = std::sqrt(sq[i] / n);
    return stats;
}

static void require_stats_shape(const NormStatsList& stats) {
    if (stats.size() != kNumFeatures + 1)
        throw IntegrityError("normalization stats have " + std::to_string(stats.size()) +
                             " entries, expected " + std::to_string(kNumFeatures + 1));
}

std::vector<NormalizedRecord> apply_normalization(const std::vector<OptionRecord>& records,
                                                  const NormStatsList& stats) {
    require_stats_shape(stats);

    std::vector<NormalizedRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        NormalizedRecord nr;
        nr.date = r.date;
        nr.option_id = r.option_id;
        auto f = r.features();
        for (std::size_t i = 0; i < kNumFeatures; ++i)
            nr.features[i] = (f[i] - stats[i].mean) / std::max(stats[i].std, kSigmaFloor);
        nr.target = (r.settle - stats[kNumFeatures].mean) /
                    std::max(stats[kNumFeatures].std, kSigmaFloor);
        out.push_back(std::move(nr));
    }
    return out;
}

double denormalize_target(double normalized, const NormStatsList& stats) {
    require_stats_shape(stats);
    const NormStats& t = stats[kNumFeatures];
    return normalized * std::max(t.std, kSigmaFloor) + t.mean;
}

FeatureTensorSet build_windows(const std::vector<NormalizedRecord>& records,
                               const NormStatsList& stats, std::size_t window) {
    require_stats_shape(stats);
    if (window == 0) throw UsageError("window must be positive");

    // Group per option, keeping first-encounter option order; sort each
    // option's records by date so windows span consecutive trading days.
    std::vector<std::string> option_order;
    std::unordered_map<std::string, std::vector<const NormalizedRecord*>> by_option;
    for (const auto& r : records) {
        auto [it, inserted] = by_option.try_emplace(r.option_id);
        if (inserted) option_order.push_back(r.option_id);
        it->second.push_back(&r);
    }
    for (auto& [id, recs] : by_option)
        std::stable_sort(recs.begin(), recs.end(),
                         [](const NormalizedRecord* a, const NormalizedRecord* b) {
                             return a->date < b->date;
                         });

    std::size_t n_samples = 0;
    for (const auto& id : option_order) {
        std::size_t len = by_option.at(id).size();
        if (len >= window) n_samples += len - window + 1;
    }
    if (n_samples == 0)
        throw DataError("no option has at least " + std::to_string(window) +
                        " days; cannot build windows");

    FeatureTensorSet set;
    set.window = window;
    set.norm_stats = stats;
    set.inputs = Tensor::zeros({window, kNumChannels, n_samples, kFeaturesPerChannel});
    set.targets = Tensor::zeros({n_samples, 1});
    set.option_index.reserve(n_samples);

    auto& input_data = set.inputs.values();
    auto& target_data = set.targets.values();

    std::size_t n = 0;
    for (const auto& id : option_order) {
        const auto& recs = by_option.at(id);
        if (recs.size() < window) continue;
        for (std::size_t start = 0; start + window <= recs.size(); ++start, ++n) {
            for (std::size_t t = 0; t < window; ++t) {
                const auto& f = recs[start + t]->features;
                for (std::size_t c = 0; c < kNumChannels; ++c)
                    for (std::size_t d = 0; d < kFeaturesPerChannel; ++d)
                        input_data[((t * kNumChannels + c) * n_samples + n) * kFeaturesPerChannel +
                                   d] = f[c * kFeaturesPerChannel + d];
            }
            const NormalizedRecord* target_day = recs[start + window - 1];
            target_data[n] = target_day->target;
            set.option_index.push_back({id, target_day->date});
        }
    }
    return set;
}

namespace {

std::string format_date(std::chrono::sys_days day) {
    std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace

std::vector<OptionRecord> generate_synthetic(const SyntheticConfig& config) {
    if (config.n_options == 0) throw UsageError("n_options must be positive");
    if (config.days_per_option == 0) throw UsageError("days_per_option must be positive");
    if (config.gbm.s0 <= 0.0) throw UsageError("GBM start price must be positive");
    if (config.gbm.sigma <= 0.0) throw UsageError("GBM volatility must be positive");
    if (config.noise_std < 0.0) throw UsageError("noise_std must be >= 0");

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // One shared underlying path long enough for the last option's lifetime.
    const std::size_t path_len = config.n_options + config.days_per_option;
    std::vector<double> path(path_len);
    path[0] = config.gbm.s0;
    const double dt = 1.0 / 365.0;
    const double drift = (config.gbm.mu - 0.5 * config.gbm.sigma * config.gbm.sigma) * dt;
    const double step_vol = config.gbm.sigma * std::sqrt(dt);
    for (std::size_t k = 1; k < path_len; ++k)
        path[k] = path[k - 1] * std::exp(drift + step_vol * gauss(rng));

    std::uniform_real_distribution<double> strike_mult(0.85, 1.15);
    std::uniform_int_distribution<int> extra_expiry(5, 30);
    std::uniform_int_distribution<int> start_inventory(500, 1500);
    std::uniform_int_distribution<int> inventory_step(-50, 50);

    const std::chrono::sys_days base_date = std::chrono::year{2018} / 4 / 2;

    std::vector<OptionRecord> records;
    records.reserve(config.n_options * config.days_per_option);

    const int id_width = config.n_options > 9999 ? 6 : 4;
    for (std::size_t i = 0; i < config.n_options; ++i) {
        char id_buf[24];
        std::snprintf(id_buf, sizeof id_buf, "OPT%0*zu", id_width, i);
        const std::string option_id = id_buf;

        const double strike = std::max(0.01, std::round(path[i] * strike_mult(rng) * 100.0) / 100.0);
        const bs::OptionKind kind =
            (rng() & 1u) ? bs::OptionKind::Call : bs::OptionKind::Put;
        // Expires after the last observed day so tau stays positive throughout.
        const int expiry_days = static_cast<int>(config.days_per_option) + extra_expiry(rng);
        double inventory = start_inventory(rng);

        double prev_settle = 0.0;
        for (std::size_t j = 0; j < config.days_per_option; ++j) {
            const std::size_t abs_day = i + j;
            bs::BsInputs inp;
            inp.spot = path[abs_day];
            inp.strike = strike;
            inp.days_to_expire = static_cast<double>(expiry_days - static_cast<int>(j));
            inp.rate = config.rate;
            inp.vol = config.gbm.sigma;
            inp.kind = kind;

            const double theory = bs::bs_price(inp);
            double settle = theory;
            if (config.noise_std > 0.0) {
                settle = theory * (1.0 + config.noise_std * gauss(rng));
                // Keep the noisy quote inside the arbitrage bounds so the
                // implied vol always exists.
                const double margin = 1e-6 * inp.spot;
                const double lo = bs::lower_price_bound(inp) + margin;
                const double hi = bs::upper_price_bound(inp) - margin;
                settle = std::clamp(settle, lo, std::max(lo, hi));
            }

            OptionRecord rec;
            rec.date = format_date(base_date + std::chrono::days(abs_day));
            rec.option_id = option_id;
            rec.spot = inp.spot;
            rec.strike = strike;
            rec.days_to_expire = inp.days_to_expire;
            rec.call_put = kind;
            rec.implied_vol = bs::implied_vol(settle, inp);
            rec.prev_settle = (j == 0) ? settle : prev_settle;
            rec.settle_change = settle - rec.prev_settle;
            rec.theory_price = theory;
            rec.theory_margin = 0.12 * inp.spot + settle;
            if (j > 0) inventory = std::max(0.0, inventory + inventory_step(rng));
            rec.inventory = inventory;

            bs::BsInputs greek_inp = inp;
            greek_inp.vol = rec.implied_vol;
            const bs::GreeksVector g = bs::bs_greeks(greek_inp);
            rec.delta = g.delta;
            rec.gamma = g.gamma;
            rec.theta = g.theta;
            rec.vega = g.vega;
            rec.rho = g.rho;

            rec.settle = settle;
            prev_settle = settle;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace opnn::market

#include "opnn/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "opnn/errors.hpp"

namespace opnn::evaluation {

namespace {

constexpr double kMapeFloor = 1e-8;

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_metric(const std::optional<double>& v) {
    return v ? format_number(*v) : "undefined";
}

std::string format_table_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_table_metric(const std::optional<double>& v) {
    return v ? format_table_number(*v) : "undefined";
}

// (option_id, date) -> record, for pulling raw target-day fields.
std::unordered_map<std::string, const market::OptionRecord*> index_records(
    const std::vector<market::OptionRecord>& records) {
    std::unordered_map<std::string, const market::OptionRecord*> index;
    index.reserve(records.size());
    for (const auto& r : records) index[r.option_id + '\n' + r.date] = &r;
    return index;
}

const market::OptionRecord& record_for(
    const std::unordered_map<std::string, const market::OptionRecord*>& index,
    const market::SampleKey& key) {
    auto it = index.find(key.option_id + '\n' + key.date);
    if (it == index.end())
        throw IntegrityError("no record for sample " + key.option_id + " @ " + key.date);
    return *it->second;
}

}  // namespace

Metrics compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred) {
    if (y_true.size() != y_pred.size())
        throw DimensionError("metric inputs differ in length: " + std::to_string(y_true.size()) +
                             " vs " + std::to_string(y_pred.size()));
    if (y_true.empty()) throw UsageError("cannot compute metrics on empty vectors");

    const std::size_t n = y_true.size();
    Metrics m;
    m.n_samples = n;

    double se = 0.0, ae = 0.0, ape = 0.0;
    std::size_t ape_n = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y_true[i] - y_pred[i];
        se += e * e;
        ae += std::abs(e);
        if (std::abs(y_true[i]) >= kMapeFloor) {
            ape += std::abs(e / y_true[i]);
            ++ape_n;
        }
    }
    m.mse = se / static_cast<double>(n);
    m.rmse = std::sqrt(m.mse);
    m.map = ae / static_cast<double>(n);
    m.mape_excluded = n - ape_n;
    if (ape_n > 0) m.mape = ape / static_cast<double>(ape_n);

    if (n >= 2) {
        const double mean_t = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
        const double mean_p = std::accumulate(y_pred.begin(), y_pred.end(), 0.0) / n;
        double stt = 0.0, spp = 0.0, stp = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = y_true[i] - mean_t;
            const double dp = y_pred[i] - mean_p;
            stt += dt * dt;
            spp += dp * dp;
            stp += dt * dp;
        }
        // Sample (1/(n-1)) normalization cancels in the ratio.
        if (stt > 0.0 && spp > 0.0) m.pcc = stp / std::sqrt(stt * spp);
    }
    return m;
}

EvalReport evaluate_model(models::Model& model, const market::FeatureTensorSet& data,
                          const std::vector<market::OptionRecord>& records,
                          const std::string& split_name, std::size_t batch_size) {
    if (batch_size == 0) throw UsageError("batch_size must be >= 1");
    const std::size_t n = data.num_samples();
    if (n == 0) throw UsageError("evaluation data has no samples");

    EvalReport report;
    report.model = models::to_string(model.config().kind);
    report.split = split_name;
    report.keys = data.option_index;
    report.y_true.reserve(n);
    report.y_pred.reserve(n);

    auto index = index_records(records);
    for (const auto& key : data.option_index)
        report.y_true.push_back(record_for(index, key).settle);

    NoGradScope no_grad;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(start + batch_size, n);
        std::vector<std::size_t> indices(stop - start);
        std::iota(indices.begin(), indices.end(), start);

        models::Batch batch = models::make_batch(model.config(), data, indices);
        Tensor pred = model.forward(batch.inputs);
        for (double v : pred.values())
            report.y_pred.push_back(market::denormalize_target(v, data.norm_stats));
    }

    report.metrics = compute_metrics(report.y_true, report.y_pred);
    return report;
}

namespace {

EvalReport evaluate_from_records(const market::FeatureTensorSet& data,
                                 const std::vector<market::OptionRecord>& records,
                                 const std::string& model_name, const std::string& split_name,
                                 double (*predict)(const market::OptionRecord&, double),
                                 double rate) {
    if (data.num_samples() == 0) throw UsageError("evaluation data has no samples");

    EvalReport report;
    report.model = model_name;
    report.split = split_name;
    report.keys = data.option_index;

    auto index = index_records(records);
    for (const auto& key : data.option_index) {
        const auto& rec = record_for(index, key);
        report.y_true.push_back(rec.settle);
        report.y_pred.push_back(predict(rec, rate));
    }
    report.metrics = compute_metrics(report.y_true, report.y_pred);
    return report;
}

}  // namespace

EvalReport evaluate_bs(const market::FeatureTensorSet& data,
                       const std::vector<market::OptionRecord>& records, double rate,
                       const std::string& split_name) {
    return evaluate_from_records(data, records, "bs", split_name,
                                 &models::bs_baseline_predict, rate);
}

EvalReport evaluate_naive(const market::FeatureTensorSet& data,
                          const std::vector<market::OptionRecord>& records,
                          const std::string& split_name) {
    return evaluate_from_records(
        data, records, "naive_prev_settle", split_name,
        [](const market::OptionRecord& rec, double) { return rec.prev_settle; }, 0.0);
}

namespace {

std::vector<std::string> report_row(const EvalReport& r) {
    return {r.model,
            r.split,
            std::to_string(r.metrics.n_samples),
            format_table_number(r.metrics.mse),
            format_table_number(r.metrics.rmse),
            format_table_number(r.metrics.map),
            format_table_metric(r.metrics.mape),
            std::to_string(r.metrics.mape_excluded),
            format_table_metric(r.metrics.pcc)};
}

const std::vector<std::string> kColumns = {"model", "split",         "n",   "mse", "rmse",
                                           "map",   "mape",          "mape_excluded", "pcc"};

}  // namespace

std::string metrics_table(const std::vector<EvalReport>& reports) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back(kColumns);
    for (const auto& r : reports) rows.push_back(report_row(r));

    std::vector<std::size_t> widths(kColumns.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) out.append(widths[c] - row[c].size() + 2, ' ');
        }
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    for (std::size_t c = 0; c < kColumns.size(); ++c) out << (c ? "," : "") << kColumns[c];
    out << '\n';
    for (const auto& r : reports) {
        out << r.model << ',' << r.split << ',' << r.metrics.n_samples << ','
            << format_number(r.metrics.mse) << ',' << format_number(r.metrics.rmse) << ','
            << format_number(r.metrics.map) << ',' << format_metric(r.metrics.mape) << ','
            << r.metrics.mape_excluded << ',' << format_metric(r.metrics.pcc) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

void write_predictions_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);

    out << "date,option_id,y_true,y_pred\n";
    for (std::size_t i = 0; i < report.keys.size(); ++i) {
        out << report.keys[i].date << ',' << report.keys[i].option_id << ','
            << format_number(report.y_true[i]) << ',' << format_number(report.y_pred[i]) << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace opnn::evaluation

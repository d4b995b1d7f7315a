#pragma once

#include <optional>
#include <string>
#include <vector>

#include "opnn/market_data.hpp"
#include "opnn/models.hpp"

namespace opnn::evaluation {

// The five measurements, on whatever scale y/yhat arrive in (the pipeline
// always passes de-normalized prices). map is the mean absolute error.
struct Metrics {
    double mse = 0.0;
    double rmse = 0.0;
    double map = 0.0;
    std::optional<double> mape;  // undefined when every |y| < 1e-8
    std::size_t mape_excluded = 0;
    std::optional<double> pcc;  // undefined for n < 2 or zero variance
    std::size_t n_samples = 0;
};

Metrics compute_metrics(const std::vector<double>& y_true, const std::vector<double>& y_pred);

struct EvalReport {
    std::string model;
    std::string split;
    Metrics metrics;
    std::vector<market::SampleKey> keys;
    std::vector<double> y_true;  // raw settle prices
    std::vector<double> y_pred;  // de-normalized predictions
};

// Batched no-grad forward over every sample; y_true is taken from the raw
// records (matched by option_id + date), y_pred de-normalized via the set's
// target stats.
EvalReport evaluate_model(models::Model& model, const market::FeatureTensorSet& data,
                          const std::vector<market::OptionRecord>& records,
                          const std::string& split_name, std::size_t batch_size = 256);

// Closed-form baseline repriced from each target day's own quoted fields.
EvalReport evaluate_bs(const market::FeatureTensorSet& data,
                       const std::vector<market::OptionRecord>& records, double rate,
                       const std::string& split_name);

// Naive persistence baseline: y_pred = prev_settle of the target day.
EvalReport evaluate_naive(const market::FeatureTensorSet& data,
                          const std::vector<market::OptionRecord>& records,
                          const std::string& split_name);

// Aligned text table: one row per report, columns n / mse / rmse / map /
// mape / mape_excluded / pcc. Undefined metrics print as "undefined".
std::string metrics_table(const std::vector<EvalReport>& reports);

void write_metrics_csv(const std::vector<EvalReport>& reports, const std::string& path);

// date,option_id,y_true,y_pred
void write_predictions_csv(const EvalReport& report, const std::string& path);

}  // namespace opnn::evaluation

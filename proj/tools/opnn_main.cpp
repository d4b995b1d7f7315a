#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "opnn/blackscholes.hpp"
#include "opnn/errors.hpp"
#include "opnn/evaluation.hpp"
#include "opnn/market_data.hpp"
#include "opnn/models.hpp"
#include "opnn/pipeline.hpp"
#include "opnn/training.hpp"

namespace {

using namespace opnn;

struct GenerateFlags {
    market::SyntheticConfig synth;
    std::string out = "data.csv";
};

void cmd_generate(const GenerateFlags& flags, bool quiet) {
    const auto records = market::generate_synthetic(flags.synth);
    market::save_csv(records, flags.out);

    const auto out_path = std::filesystem::path(flags.out);
    const auto out_dir = out_path.has_parent_path() ? out_path.parent_path().string() : ".";
    nlohmann::json echo{{"options", flags.synth.n_options},
                        {"days", flags.synth.days_per_option},
                        {"seed", flags.synth.seed},
                        {"noise_std", flags.synth.noise_std},
                        {"s0", flags.synth.gbm.s0},
                        {"mu", flags.synth.gbm.mu},
                        {"sigma", flags.synth.gbm.sigma},
                        {"rate", flags.synth.rate},
                        {"out", flags.out}};
    pipeline::write_manifest(out_dir, "generate", echo, {flags.out},
                             {out_path.filename().string()}, flags.synth.seed);

    if (!quiet)
        std::cout << "wrote " << records.size() << " records for " << flags.synth.n_options
                  << " options to " << flags.out << '\n';
}

void cmd_train(const std::string& config_path, bool quiet) {
    const pipeline::RunConfig config = pipeline::load_run_config(config_path);

    auto model = models::Model::create(config.model, config.train.seed);

    const auto records = market::load_csv(config.data_path);
    const auto split = pipeline::prepare_split(records, config);
    const auto stats = market::fit_normalization(split.train);
    const auto train_set = pipeline::window_records(split.train, stats, config.model.window);

    if (!quiet)
        std::cout << "training " << models::to_string(config.model.kind) << " on "
                  << train_set.num_samples() << " samples\n";

    training::EpochCallback on_epoch;
    if (!quiet)
        on_epoch = [](const training::EpochLog& e) {
            std::cout << "epoch," << e.epoch << ",train_mse," << e.train_mse << '\n';
        };
    const auto log = training::train(*model, train_set, config.train, on_epoch);

    std::filesystem::create_directories(config.out_dir);
    const auto out = [&](const char* name) {
        return (std::filesystem::path(config.out_dir) / name).string();
    };
    training::write_train_log(log, out("train_log.csv"));
    training::save_checkpoint({pipeline::checkpoint_header(config, stats), model->params()},
                              out("checkpoint.opnn"));
    pipeline::write_manifest(config.out_dir, "train", pipeline::run_config_to_json(config),
                             {config.data_path}, {"checkpoint.opnn", "train_log.csv"},
                             config.train.seed);

    if (!quiet) std::cout << "checkpoint written to " << out("checkpoint.opnn") << '\n';
}

struct EvaluateFlags {
    std::string checkpoint;
    std::string data;
    std::string split = "test";
    std::string model;  // only "bs" is accepted
    std::string out = ".";
    double rate = 0.03;
    std::size_t window = market::kDefaultWindow;
    std::size_t min_days = 20;
    std::size_t n_train_options = 600;
};

void cmd_evaluate(const EvaluateFlags& flags, bool quiet) {
    if (flags.split != "train" && flags.split != "test")
        throw UsageError("--split must be train or test");
    if (!flags.model.empty() && flags.model != "bs")
        throw UsageError("--model supports only 'bs'; learned models evaluate via --checkpoint");
    if (flags.model.empty() && flags.checkpoint.empty())
        throw UsageError("provide --checkpoint PATH or --model bs");
    if (!flags.model.empty() && !flags.checkpoint.empty())
        throw UsageError("--model bs and --checkpoint are mutually exclusive");

    const bool use_bs = !flags.model.empty();

    // With a checkpoint, data preparation settings come from its header so the
    // split matches training; the bs baseline takes them from flags.
    pipeline::RunConfig config;
    training::Checkpoint checkpoint;
    if (use_bs) {
        config.model.window = flags.window;
        config.min_days = flags.min_days;
        config.n_train_options = flags.n_train_options;
        config.rate = flags.rate;
    } else {
        checkpoint = training::load_checkpoint(flags.checkpoint);
        config = pipeline::run_config_from_checkpoint_header(checkpoint.header);
    }

    const auto records = market::load_csv(flags.data);
    const auto split = pipeline::prepare_split(records, config);
    const auto& chosen = flags.split == "train" ? split.train : split.test;
    if (chosen.empty()) throw UsageError("empty split: no options fall in '" + flags.split + "'");

    const auto stats = use_bs ? market::fit_normalization(split.train)
                              : pipeline::norm_stats_from_json(checkpoint.header.at("norm_stats"));
    const auto set = pipeline::window_records(chosen, stats, config.model.window);

    evaluation::EvalReport report;
    std::uint64_t seed = 0;
    if (use_bs) {
        report = evaluation::evaluate_bs(set, chosen, config.rate, flags.split);
    } else {
        auto model = models::Model::create(config.model, config.train.seed);
        training::restore_params(*model, checkpoint.params);
        report = evaluation::evaluate_model(*model, set, chosen, flags.split);
        seed = config.train.seed;
    }

    std::filesystem::create_directories(flags.out);
    const auto out = [&](const char* name) {
        return (std::filesystem::path(flags.out) / name).string();
    };
    const std::string table = evaluation::metrics_table({report});
    {
        std::ofstream txt(out("metrics.txt"), std::ios::binary);
        if (!txt) throw IoError("cannot write " + out("metrics.txt"));
        txt << table;
    }
    evaluation::write_metrics_csv({report}, out("metrics.csv"));
    evaluation::write_predictions_csv(report, out("predictions.csv"));

    std::vector<std::string> inputs = {flags.data};
    if (!use_bs) inputs.push_back(flags.checkpoint);
    nlohmann::json echo = pipeline::run_config_to_json(config);
    echo["evaluated_split"] = flags.split;
    if (use_bs) echo["model"] = "bs";
    pipeline::write_manifest(flags.out, "evaluate", echo, inputs,
                             {"metrics.txt", "metrics.csv", "predictions.csv"}, seed);

    if (!quiet) std::cout << table;
}

struct BsPriceFlags {
    double spot = 0.0;
    double strike = 0.0;
    double days = 0.0;
    double rate = 0.03;
    double vol = 0.0;
    std::string kind;
    bool greeks = false;
};

void cmd_bs_price(const BsPriceFlags& flags) {
    if (!(flags.spot > 0.0)) throw UsageError("--spot must be positive");
    if (!(flags.strike > 0.0)) throw UsageError("--strike must be positive");
    if (flags.days < 0.0) throw UsageError("--days must be >= 0");
    if (flags.vol < 0.0) throw UsageError("--vol must be >= 0");
    if (flags.kind != "call" && flags.kind != "put")
        throw UsageError("--kind must be call or put");

    bs::BsInputs inp;
    inp.spot = flags.spot;
    inp.strike = flags.strike;
    inp.days_to_expire = flags.days;
    inp.rate = flags.rate;
    inp.vol = flags.vol;
    inp.kind = flags.kind == "call" ? bs::OptionKind::Call : bs::OptionKind::Put;

    if (!flags.greeks) {
        std::printf("%.6f\n", bs::bs_price(inp));
        return;
    }
    const double price = bs::bs_price(inp);
    const bs::GreeksVector g = bs::bs_greeks(inp);
    std::printf("price %.6f\n", price);
    std::printf("delta %.6f\n", g.delta);
    std::printf("gamma %.6f\n", g.gamma);
    std::printf("theta %.6f\n", g.theta);
    std::printf("vega %.6f\n", g.vega);
    std::printf("rho %.6f\n", g.rho);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"option settle-price models over 3-channel tensor frames"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --quiet appear after the subcommand too
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress progress output");

    GenerateFlags gen;
    auto* generate = app.add_subcommand("generate", "write a synthetic option dataset CSV");
    generate->add_option("--options", gen.synth.n_options, "number of options")
        ->capture_default_str();
    generate->add_option("--days", gen.synth.days_per_option, "trading days per option")
        ->capture_default_str();
    generate->add_option("--seed", gen.synth.seed, "RNG seed")->capture_default_str();
    generate->add_option("--noise-std", gen.synth.noise_std, "relative settle noise")
        ->capture_default_str();
    generate->add_option("--s0", gen.synth.gbm.s0, "underlying start price")
        ->capture_default_str();
    generate->add_option("--mu", gen.synth.gbm.mu, "underlying drift")->capture_default_str();
    generate->add_option("--sigma", gen.synth.gbm.sigma, "underlying volatility")
        ->capture_default_str();
    generate->add_option("--rate", gen.synth.rate, "risk-free rate")->capture_default_str();
    generate->add_option("--out", gen.out, "output CSV path")->capture_default_str();

    std::string config_path;
    auto* train = app.add_subcommand("train", "train a model from a JSON config file");
    train->add_option("--config", config_path, "JSON config path")->required();

    EvaluateFlags ev;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint or the bs baseline");
    evaluate->add_option("--checkpoint", ev.checkpoint, "checkpoint.opnn path");
    evaluate->add_option("--data", ev.data, "dataset CSV path")->required();
    evaluate->add_option("--split", ev.split, "train or test")->capture_default_str();
    evaluate->add_option("--model", ev.model, "bs for the closed-form baseline");
    evaluate->add_option("--out", ev.out, "output directory")->capture_default_str();
    evaluate->add_option("--rate", ev.rate, "risk-free rate (bs baseline)")
        ->capture_default_str();
    evaluate->add_option("--window", ev.window, "window length (bs baseline)")
        ->capture_default_str();
    evaluate->add_option("--min-days", ev.min_days, "minimum option lifetime (bs baseline)")
        ->capture_default_str();
    evaluate->add_option("--train-options", ev.n_train_options,
                         "options in the train split (bs baseline)")
        ->capture_default_str();

    BsPriceFlags bsf;
    auto* bs_price = app.add_subcommand("bs-price", "price one European option");
    bs_price->add_option("--spot", bsf.spot, "spot price")->required();
    bs_price->add_option("--strike", bsf.strike, "strike price")->required();
    bs_price->add_option("--days", bsf.days, "calendar days to expiry")->required();
    bs_price->add_option("--rate", bsf.rate, "risk-free rate")->capture_default_str();
    bs_price->add_option("--vol", bsf.vol, "annualized volatility")->required();
    bs_price->add_option("--kind", bsf.kind, "call or put")->required();
    bs_price->add_flag("--greeks", bsf.greeks, "also print the five Greeks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error:usage: " << e.what() << '\n';
        return 1;
    }

    try {
        if (generate->parsed()) cmd_generate(gen, quiet);
        if (train->parsed()) cmd_train(config_path, quiet);
        if (evaluate->parsed()) cmd_evaluate(ev, quiet);
        if (bs_price->parsed()) cmd_bs_price(bsf);
    } catch (const opnn::Error& e) {
        std::cerr << "error:" << e.category() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"
#include "json.hpp"

using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

namespace fs = std::filesystem;

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "opnn_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    static int call_no = 0;
    const auto out_path = work_dir() / ("stdout." + std::to_string(call_no));
    const auto err_path = work_dir() / ("stderr." + std::to_string(call_no));
    ++call_no;

    const std::string command = std::string(OPNN_CLI_PATH) + " " + args + " > " +
                                out_path.string() + " 2> " + err_path.string();
    const int status = std::system(command.c_str());

    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

// One small dataset shared by the train/evaluate cases (5 options, 15 days).
std::string shared_dataset() {
    static std::string path;
    if (path.empty()) {
        path = (work_dir() / "data.csv").string();
        auto r = run_cli("generate --options 5 --days 15 --seed 7 --noise-std 0.02 --out " + path);
        REQUIRE(r.exit_code == 0);
    }
    return path;
}

std::string write_config(const std::string& name, const nlohmann::json& config) {
    const auto path = work_dir() / name;
    std::ofstream out(path);
    out << config.dump(2);
    return path.string();
}

nlohmann::json base_train_config(const std::string& out_subdir) {
    return {{"model", "lstm"},     {"data", shared_dataset()},
            {"out", (work_dir() / out_subdir).string()},
            {"seed", 3},           {"epochs", 2},
            {"batch_size", 16},    {"min_days", 10},
            {"n_train_options", 3}};
}

}  // namespace

TEST_CASE("cli: bs-price") {
    SECTION("prints the price to six decimals") {
        auto r = run_cli("bs-price --spot 100 --strike 100 --days 365 --rate 0.05 --vol 0.2 "
                         "--kind call");
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.out == "10.450584\n");
        REQUIRE(r.err.empty());
    }

    SECTION("put price agrees with parity") {
        auto r = run_cli("bs-price --spot 100 --strike 100 --days 365 --rate 0.05 --vol 0.2 "
                         "--kind put");
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.out == "5.573526\n");
    }

    SECTION("--greeks prints the labelled sensitivities") {
        auto r = run_cli("bs-price --spot 100 --strike 100 --days 365 --rate 0.05 --vol 0.2 "
                         "--kind call --greeks");
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.out ==
                "price 10.450584\n"
                "delta 0.636831\n"
                "gamma 0.018762\n"
                "theta -0.017573\n"
                "vega 37.524035\n"
                "rho 53.232482\n");
    }

    SECTION("flag validation") {
        auto r = run_cli("bs-price --spot 100 --strike 100 --days 365 --vol -0.1 --kind call");
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, StartsWith("error:usage:"));
        REQUIRE_THAT(r.err, ContainsSubstring("--vol"));

        r = run_cli("bs-price --spot 100 --strike 100 --days 365 --vol 0.2 --kind banana");
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, ContainsSubstring("--kind must be call or put"));

        r = run_cli("bs-price --spot 100 --strike 100 --vol 0.2 --kind call");  // --days missing
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, StartsWith("error:usage:"));
    }
}

TEST_CASE("cli: argument errors") {
    REQUIRE(run_cli("").exit_code == 1);

    auto r = run_cli("frobnicate");
    REQUIRE(r.exit_code == 1);
    REQUIRE_THAT(r.err, StartsWith("error:usage:"));
}

TEST_CASE("cli: generate") {
    const auto csv = (work_dir() / "gen_a.csv").string();
    auto r = run_cli("generate --options 5 --days 30 --seed 7 --out " + csv);
    REQUIRE(r.exit_code == 0);
    REQUIRE_THAT(r.out, ContainsSubstring("wrote 150 records for 5 options to " + csv));

    const std::string content = read_file(csv);
    REQUIRE(line_count(content) == 151);  // header + 5 * 30 rows
    REQUIRE_THAT(content, StartsWith("date,option_id,"));

    SECTION("writes a manifest next to the csv") {
        auto manifest = nlohmann::json::parse(read_file(work_dir() / "manifest.json"));
        REQUIRE(manifest.at("command") == "generate");
        REQUIRE(manifest.at("seed") == 7);
        REQUIRE(manifest.at("outputs") == nlohmann::json::array({"gen_a.csv"}));
        REQUIRE(manifest.at("inputs").contains(csv));  // hash of the produced file
    }

    SECTION("same seed, same bytes; different seed, different data") {
        const auto csv_b = (work_dir() / "gen_b.csv").string();
        REQUIRE(run_cli("generate --options 5 --days 30 --seed 7 --out " + csv_b).exit_code ==
                0);
        REQUIRE(read_file(csv_b) == content);

        const auto csv_c = (work_dir() / "gen_c.csv").string();
        REQUIRE(run_cli("generate --options 5 --days 30 --seed 8 --out " + csv_c).exit_code ==
                0);
        REQUIRE(read_file(csv_c) != content);
    }

    SECTION("rejects a degenerate request") {
        auto bad = run_cli("generate --options 0 --out " + (work_dir() / "none.csv").string());
        REQUIRE(bad.exit_code == 1);
        REQUIRE_THAT(bad.err, StartsWith("error:usage:"));
    }

    SECTION("--quiet silences the summary") {
        const auto csv_q = (work_dir() / "gen_q.csv").string();
        auto quiet = run_cli("generate --quiet --options 2 --days 12 --out " + csv_q);
        REQUIRE(quiet.exit_code == 0);
        REQUIRE(quiet.out.empty());
    }
}

TEST_CASE("cli: train") {
    const auto config_path = write_config("train_ok.json", base_train_config("run_a"));
    auto r = run_cli("train --config " + config_path);
    REQUIRE(r.exit_code == 0);

    // Progress: one parseable line per epoch.
    REQUIRE_THAT(r.out, ContainsSubstring("epoch,1,train_mse,"));
    REQUIRE_THAT(r.out, ContainsSubstring("epoch,2,train_mse,"));

    const auto run_dir = work_dir() / "run_a";
    REQUIRE(fs::exists(run_dir / "checkpoint.opnn"));
    REQUIRE(fs::exists(run_dir / "train_log.csv"));
    REQUIRE(fs::exists(run_dir / "manifest.json"));

    const std::string log = read_file(run_dir / "train_log.csv");
    REQUIRE(line_count(log) == 2);
    REQUIRE_THAT(log, StartsWith("epoch,1,train_mse,"));

    auto manifest = nlohmann::json::parse(read_file(run_dir / "manifest.json"));
    REQUIRE(manifest.at("command") == "train");
    REQUIRE(manifest.at("inputs").contains(shared_dataset()));

    SECTION("--quiet suppresses progress output") {
        auto config2 = base_train_config("run_quiet");
        const auto quiet_config = write_config("train_quiet.json", config2);
        auto quiet = run_cli("train --quiet --config " + quiet_config);
        REQUIRE(quiet.exit_code == 0);
        REQUIRE(quiet.out.empty());
    }
}

TEST_CASE("cli: train config validation") {
    SECTION("missing required field names it") {
        auto config = base_train_config("run_bad");
        config.erase("seed");
        auto r = run_cli("train --config " + write_config("train_noseed.json", config));
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, ContainsSubstring("missing config field 'seed'"));
    }

    SECTION("unknown keys are rejected") {
        auto config = base_train_config("run_bad");
        config["learning_rte"] = 1e-4;  // typo
        auto r = run_cli("train --config " + write_config("train_typo.json", config));
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, ContainsSubstring("unknown config key 'learning_rte'"));
    }

    SECTION("the bs baseline is not trainable") {
        auto config = base_train_config("run_bad");
        config["model"] = "bs";
        auto r = run_cli("train --config " + write_config("train_bs.json", config));
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, StartsWith("error:usage:"));
        REQUIRE_THAT(r.err, ContainsSubstring("bs baseline"));
    }

    SECTION("missing config file is an io error") {
        auto r = run_cli("train --config " + (work_dir() / "nope.json").string());
        REQUIRE(r.exit_code == 1);
        REQUIRE_THAT(r.err, StartsWith("error:io:"));
    }
}

TEST_CASE("cli: evaluate a checkpoint") {
    // Train once, then score both splits from the saved checkpoint.
    const auto config_path = write_config("eval_train.json", base_train_config("run_eval"));
    REQUIRE(run_cli("train --quiet --config " + config_path).exit_code == 0);
    const auto checkpoint = (work_dir() / "run_eval" / "checkpoint.opnn").string();

    const auto out_dir = work_dir() / "eval_test";
    auto r = run_cli("evaluate --checkpoint " + checkpoint + " --data " + shared_dataset() +
                     " --split test --out " + out_dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE_THAT(r.out, ContainsSubstring("lstm"));
    REQUIRE_THAT(r.out, ContainsSubstring("mse"));

    for (const char* name : {"metrics.txt", "metrics.csv", "predictions.csv", "manifest.json"})
        REQUIRE(fs::exists(out_dir / name));

    // 2 test options x (15 - 10 + 1) windows.
    const std::string metrics_csv = read_file(out_dir / "metrics.csv");
    REQUIRE_THAT(metrics_csv, ContainsSubstring("lstm,test,12,"));
    const std::string predictions = read_file(out_dir / "predictions.csv");
    REQUIRE(line_count(predictions) == 13);

    SECTION("train split evaluates too") {
        const auto train_dir = work_dir() / "eval_train_split";
        auto t = run_cli("evaluate --quiet --checkpoint " + checkpoint + " --data " +
                         shared_dataset() + " --split train --out " + train_dir.string());
        REQUIRE(t.exit_code == 0);
        REQUIRE_THAT(read_file(train_dir / "metrics.csv"),
                     ContainsSubstring("lstm,train,18,"));
    }

    SECTION("evaluation is reproducible byte for byte") {
        const auto again = work_dir() / "eval_again";
        REQUIRE(run_cli("evaluate --quiet --checkpoint " + checkpoint + " --data " +
                        shared_dataset() + " --split test --out " + again.string())
                    .exit_code == 0);
        for (const char* name : {"metrics.csv", "predictions.csv"})
            REQUIRE(read_file(again / name) == read_file(out_dir / name));
    }
}

TEST_CASE("cli: evaluate the bs baseline") {
    const auto out_dir = work_dir() / "eval_bs";
    auto r = run_cli("evaluate --model bs --data " + shared_dataset() +
                     " --split test --min-days 10 --train-options 3 --out " + out_dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE_THAT(read_file(out_dir / "metrics.csv"), ContainsSubstring("bs,test,12,"));
}

TEST_CASE("cli: evaluate flag validation") {
    const auto data = shared_dataset();

    auto r = run_cli("evaluate --data " + data + " --split validation --model bs");
    REQUIRE(r.exit_code == 1);
    REQUIRE_THAT(r.err, ContainsSubstring("--split must be train or test"));

    r = run_cli("evaluate --data " + data);
    REQUIRE(r.exit_code == 1);
    REQUIRE_THAT(r.err, ContainsSubstring("provide --checkpoint PATH or --model bs"));

    r = run_cli("evaluate --data " + data + " --model bs --checkpoint x.opnn");
    REQUIRE(r.exit_code == 1);
    REQUIRE_THAT(r.err, ContainsSubstring("mutually exclusive"));

    r = run_cli("evaluate --data " + data + " --model lstm");
    REQUIRE(r.exit_code == 1);
    REQUIRE_THAT(r.err, ContainsSubstring("--model supports only 'bs'"));

    SECTION("a split that takes every option is reported as empty") {
        auto empty = run_cli("evaluate --model bs --data " + data +
                             " --split test --min-days 10 --train-options 5 --out " +
                             (work_dir() / "eval_empty").string());
        REQUIRE(empty.exit_code == 1);
        REQUIRE_THAT(empty.err, StartsWith("error:usage:"));
        REQUIRE_THAT(empty.err, ContainsSubstring("empty split"));
    }

    SECTION("missing checkpoint file") {
        auto missing = run_cli("evaluate --checkpoint " +
                               (work_dir() / "ghost.opnn").string() + " --data " + data);
        REQUIRE(missing.exit_code == 1);
        REQUIRE_THAT(missing.err, StartsWith("error:io:"));
    }
}

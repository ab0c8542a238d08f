// flowguard: command-line front end for the anomaly-detection pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowguard/config.hpp"
#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/pipeline.hpp"

namespace {

using namespace flowguard;

struct Options {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::vector<std::string> sets;
    std::string model;
    std::string split;
};

std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

RunConfig load_config(const Options& opt) {
    const std::string text = opt.config_path.empty() ? std::string("{}") : read_text_file(opt.config_path);
    std::vector<std::string> overrides;
    if (const char* env = std::getenv("FLOWGUARD_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        overrides.push_back("paths.output_dir=" + quoted(env));
    }
    if (const char* env = std::getenv("FLOWGUARD_JOBS"); env != nullptr && *env != '\0') {
        overrides.push_back(std::string("jobs=") + env);
    }
    if (opt.out) overrides.push_back("paths.output_dir=" + quoted(*opt.out));
    if (opt.seed) overrides.push_back("seed=" + std::to_string(*opt.seed));
    if (opt.jobs) overrides.push_back("jobs=" + std::to_string(*opt.jobs));
    overrides.insert(overrides.end(), opt.sets.begin(), opt.sets.end());
    return parse_config(text, overrides);
}

int run(const std::string& stage, const Options& opt) {
    const RunConfig cfg = load_config(opt);
    if (stage == "config") {
        std::cout << config_to_json(cfg);
        return 0;
    }
    Workspace ws(cfg);
    const Variant variant = opt.model.empty() ? configured_variant(cfg.model) : parse_variant(opt.model);
    const SplitKind split = opt.split.empty() ? cfg.split.kind : parse_split_kind(opt.split);

    if (stage == "synth") {
        ws.synth();
    } else if (stage == "ingest") {
        ws.ingest();
    } else if (stage == "featurize") {
        ws.featurize();
    } else if (stage == "label") {
        ws.label();
    } else if (stage == "split") {
        ws.split();
    } else if (stage == "train") {
        ws.train(variant, split);
    } else if (stage == "evaluate") {
        const EvalReport r = ws.evaluate(variant, split);
        std::cout << r.model_name << " (" << r.split_kind << "): ROC-AUC " << format_number(r.roc_auc)
                  << ", recall " << format_number(r.recall_anomaly) << ", precision "
                  << format_number(r.precision_anomaly) << "\n";
    } else if (stage == "ablate") {
        const auto reports = ws.ablate();
        std::cout << comparison_table(reports);
    } else if (stage == "report") {
        std::cout << ws.report();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowguard: weakly supervised anomaly detection on well production data"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("-c,--config", opt.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("-o,--out", opt.out, "Output directory (env FLOWGUARD_OUTPUT_DIR)");
    app.add_option("--seed", opt.seed, "Global seed for synthesis, splits and training");
    app.add_option("-j,--jobs", opt.jobs, "Worker threads for per-well stages (env FLOWGUARD_JOBS)");
    app.add_option("--set", opt.sets, "Override a config value, e.g. --set training.lr=0.01")
        ->type_name("KEY=VALUE")
        ->take_all();

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"synth", "Generate a synthetic field with planted anomalies"},
        {"ingest", "Parse and impute the production table"},
        {"featurize", "Engineer per-well feature matrices"},
        {"label", "Apply the weak labeling rules"},
        {"split", "Write random and time-based sample splits"},
        {"train", "Train one model variant"},
        {"evaluate", "Score the test split of one trained variant"},
        {"ablate", "Run every stage, then all variants on both splits"},
        {"report", "Print the comparison table from existing metrics"},
        {"config", "Print the effective configuration"},
    };
    for (const auto& [name, help] : stages) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        if (name == "train" || name == "evaluate") {
            sub->add_option("-m,--model", opt.model, "logistic | lstm | gat_hier | gat_peer (default: config)");
            sub->add_option("-s,--split", opt.split, "random | time (default: config)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        return run(app.get_subcommands().front()->get_name(), opt);
    } catch (const Error& e) {
        std::cerr << "flowguard: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "flowguard: " << e.what() << "\n";
        return static_cast<int>(ExitCode::data);
    }
}

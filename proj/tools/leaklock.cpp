// leaklock: side-channel leakage localization toolkit.
//
// Subcommands: gen, train, assess, eval, sweep, report. Every command takes
// an explicit --seed (falling back to the LEAKLOCK_SEED environment
// variable), accepts a TOML config via --config, and removes its partial
// outputs when it fails.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "leaklock/adversarial.hpp"
#include "leaklock/attribution.hpp"
#include "leaklock/baselines.hpp"
#include "leaklock/checkpoint.hpp"
#include "leaklock/dataset.hpp"
#include "leaklock/gmm.hpp"
#include "leaklock/metrics.hpp"
#include "leaklock/run_record.hpp"
#include "leaklock/supervised.hpp"
#include "leaklock/svg.hpp"
#include "leaklock/synth_aes.hpp"
#include "leaklock/toy.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace leaklock;

namespace {

uint64_t default_seed() {
    if (const char* env = std::getenv("LEAKLOCK_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

// Tracks paths created by the running command so a failure can clean up.
struct OutputGuard {
    std::vector<fs::path> paths;
    bool committed = false;

    void track(const fs::path& p) { paths.push_back(p); }
    ~OutputGuard() {
        if (committed) return;
        std::error_code ec;
        for (const auto& p : paths) fs::remove_all(p, ec);
    }
};

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << j.dump(2) << '\n';
}

std::string timestamp() {
    char buf[32];
    std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

TraceDataset load_standardized(const std::string& path) {
    TraceDataset ds = load_dataset(path);
    const StandardizeStats stats = standardize_fit(ds);
    standardize_apply(ds, stats);
    return ds;
}

std::string toml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

// --- gen ---------------------------------------------------------------

struct GenCommon {
    std::string out;
    uint64_t seed = default_seed();
};

void finish_gen(const TraceDataset& ds, const GenCommon& common, const json& config,
                OutputGuard& guard) {
    guard.track(common.out);
    save_dataset(ds, common.out);
    json sidecar;
    sidecar["config"] = config;
    sidecar["ground_truth"] = ds.ground_truth;
    sidecar["n"] = ds.n();
    sidecar["t"] = ds.t();
    sidecar["label_cardinality"] = ds.label_cardinality;
    sidecar["created"] = timestamp();
    const fs::path sidecar_path = common.out + ".json";
    guard.track(sidecar_path);
    write_json(sidecar_path, sidecar);
    guard.committed = true;
    std::cout << "wrote " << common.out << " (" << ds.n() << " x " << ds.t() << ")\n";
}

void setup_gen(CLI::App& app) {
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->require_subcommand(1);

    {
        auto* cmd = gen->add_subcommand("toy-xor", "4-feature second-order toy dataset");
        auto cfg = std::make_shared<ToyConfig>();
        auto common = std::make_shared<GenCommon>();
        cfg->variant = ToyConfig::Variant::SecondOrder;
        cmd->add_option("--sigma2", cfg->sigma2, "first-order noise variance");
        cmd->add_option("--n", cfg->n, "number of traces");
        cmd->add_option("--seed", common->seed, "rng seed");
        cmd->add_option("--out", common->out, "output .scld path")->required();
        cmd->callback([cfg, common] {
            cfg->seed = common->seed;
            OutputGuard guard;
            json j{{"kind", "toy-xor"}, {"sigma2", cfg->sigma2}, {"n", cfg->n},
                   {"seed", cfg->seed}};
            finish_gen(gen_toy(*cfg), *common, j, guard);
        });
    }
    {
        auto* cmd = gen->add_subcommand("toy-redundant", "redundant-feature toy dataset");
        auto cfg = std::make_shared<ToyConfig>();
        auto common = std::make_shared<GenCommon>();
        cfg->variant = ToyConfig::Variant::Redundant;
        cmd->add_option("--sigma2", cfg->sigma2, "noise variance of leaky features");
        cmd->add_option("--n-leaky", cfg->n_leaky, "number of redundant leaky features");
        cmd->add_option("--n", cfg->n, "number of traces");
        cmd->add_option("--seed", common->seed, "rng seed");
        cmd->add_option("--out", common->out, "output .scld path")->required();
        cmd->callback([cfg, common] {
            cfg->seed = common->seed;
            OutputGuard guard;
            json j{{"kind", "toy-redundant"}, {"sigma2", cfg->sigma2},
                   {"n_leaky", cfg->n_leaky}, {"n", cfg->n}, {"seed", cfg->seed}};
            finish_gen(gen_toy(*cfg), *common, j, guard);
        });
    }
    {
        auto* cmd = gen->add_subcommand("synth-aes", "synthetic AES power traces");
        auto cfg = std::make_shared<SyntheticAesConfig>();
        auto common = std::make_shared<GenCommon>();
        cmd->add_option("--n", cfg->n, "number of traces");
        cmd->add_option("--t", cfg->t, "trace length");
        cmd->add_option("--n-ops", cfg->n_ops, "distinct operation count");
        cmd->add_option("--n-lkg", cfg->n_lkg, "leaky instruction count");
        cmd->add_option("--var-data", cfg->var_data, "data-dependent noise variance");
        cmd->add_option("--var-op", cfg->var_op, "operation power variance");
        cmd->add_option("--var-resid", cfg->var_resid, "residual noise variance");
        cmd->add_option("--beta", cfg->lowpass_beta, "low-pass filter coefficient");
        cmd->add_option("--max-no-ops", cfg->max_no_ops, "max inserted no-ops");
        cmd->add_option("--shuffle-locations", cfg->shuffle_locations,
                        "candidate slots per leaky share");
        cmd->add_flag("--masking", cfg->boolean_masking, "enable Boolean masking");
        cmd->add_option("--seed", common->seed, "rng seed");
        cmd->add_option("--out", common->out, "output .scld path")->required();
        cmd->callback([cfg, common] {
            cfg->seed = common->seed;
            OutputGuard guard;
            json j{{"kind", "synth-aes"},
                   {"n", cfg->n},
                   {"t", cfg->t},
                   {"n_ops", cfg->n_ops},
                   {"n_lkg", cfg->n_lkg},
                   {"var_data", cfg->var_data},
                   {"var_op", cfg->var_op},
                   {"var_resid", cfg->var_resid},
                   {"beta", cfg->lowpass_beta},
                   {"max_no_ops", cfg->max_no_ops},
                   {"shuffle_locations", cfg->shuffle_locations},
                   {"masking", cfg->boolean_masking},
                   {"seed", cfg->seed}};
            finish_gen(gen_synthetic_aes(*cfg), *common, j, guard);
        });
    }
}

// --- train ---------------------------------------------------------------

struct TrainCommon {
    std::string data;
    std::string out;
    double val_fraction = 0.2;
    uint64_t seed = default_seed();
};

std::string supervised_config_toml(const SupervisedConfig& cfg, const TrainCommon& common) {
    std::ostringstream toml;
    toml << "command = \"train supervised\"\n"
         << "data = \"" << toml_escape(common.data) << "\"\n"
         << "lr = " << cfg.lr << "\nbeta1 = " << cfg.beta1
         << "\nweight_decay = " << cfg.weight_decay << "\nschedule = \""
         << (cfg.schedule == LrSchedule::Kind::Constant ? "constant" : "cosine")
         << "\"\nsteps = " << cfg.steps << "\nbatch_size = " << cfg.batch_size
         << "\nval_fraction = " << common.val_fraction << "\nseed = " << cfg.seed << '\n';
    toml << "hidden = [";
    for (size_t i = 0; i < cfg.hidden.size(); ++i)
        toml << (i ? ", " : "") << cfg.hidden[i];
    toml << "]\n";
    return toml.str();
}

void setup_train(CLI::App& app) {
    auto* train = app.add_subcommand("train", "Train a classifier");
    train->require_subcommand(1);

    {
        auto* cmd = train->add_subcommand("supervised", "plain supervised training");
        auto cfg = std::make_shared<SupervisedConfig>();
        auto common = std::make_shared<TrainCommon>();
        auto schedule_name = std::make_shared<std::string>("constant");
        cmd->add_option("--data", common->data, "input .scld dataset")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", common->out, "run directory")->required();
        cmd->add_option("--lr", cfg->lr, "learning rate");
        cmd->add_option("--beta1", cfg->beta1, "Adam beta1");
        cmd->add_option("--weight-decay", cfg->weight_decay, "decoupled weight decay");
        cmd->add_option("--schedule", *schedule_name, "constant|cosine");
        cmd->add_option("--steps", cfg->steps, "training steps");
        cmd->add_option("--batch-size", cfg->batch_size, "minibatch size");
        cmd->add_option("--hidden", cfg->hidden, "hidden layer widths");
        cmd->add_option("--val-fraction", common->val_fraction, "validation fraction");
        cmd->add_option("--seed", common->seed, "rng seed");
        cmd->callback([cfg, common, schedule_name] {
            cfg->seed = common->seed;
            cfg->schedule = schedule_kind_from_string(*schedule_name);
            OutputGuard guard;
            guard.track(common->out);

            TraceDataset ds = load_standardized(common->data);
            auto parts = split(ds, {1.0 - common->val_fraction, common->val_fraction},
                               common->seed);
            DatasetSampler sampler(parts[0]);
            SupervisedResult result = train_supervised(sampler, parts[1], *cfg);
            result.record.config_toml = supervised_config_toml(*cfg, *common);
            save_run_record(result.record, common->out);
            guard.committed = true;
            if (result.record.failed) {
                std::cerr << "run failed: " << result.record.failure_reason << '\n';
                std::exit(1);
            }
            std::cout << "best val rank " << result.record.best_val_rank << " at step "
                      << result.record.best_step << "; run saved to " << common->out << '\n';
        });
    }
    {
        auto* cmd = train->add_subcommand("all", "adversarial leakage localization");
        auto cfg = std::make_shared<AllConfig>();
        auto common = std::make_shared<TrainCommon>();
        cmd->add_option("--data", common->data, "input .scld dataset")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", common->out, "run directory")->required();
        cmd->add_option("--lr-theta", cfg->lr_theta, "classifier learning rate");
        cmd->add_option("--lr-eta", cfg->lr_eta, "erasure-parameter learning rate");
        cmd->add_option("--gamma-bar", cfg->gamma_bar, "mean erasure probability");
        cmd->add_option("--weight-decay", cfg->weight_decay, "classifier weight decay");
        cmd->add_option("--ratio", cfg->ratio, "eta steps per theta step");
        cmd->add_option("--pretrain", cfg->pretrain_steps, "classifier pretraining steps");
        cmd->add_option("--steps", cfg->train_steps, "adversarial training steps");
        cmd->add_option("--batch-size", cfg->batch_size, "minibatch size");
        cmd->add_option("--hidden", cfg->hidden, "hidden layer widths");
        cmd->add_option("--lambda", cfg->relax.temperature, "relaxation temperature");
        cmd->add_option("--kappa", cfg->relax.control_scale, "control variate scale");
        cmd->add_option("--val-fraction", common->val_fraction, "validation fraction");
        cmd->add_option("--seed", common->seed, "rng seed");
        cmd->callback([cfg, common] {
            cfg->seed = common->seed;
            OutputGuard guard;
            guard.track(common->out);

            TraceDataset ds = load_standardized(common->data);
            auto parts = split(ds, {1.0 - common->val_fraction, common->val_fraction},
                               common->seed);
            DatasetSampler sampler(parts[0]);
            AllResult result = train_all(sampler, parts[1], *cfg);

            std::ostringstream toml;
            toml << "command = \"train all\"\ndata = \"" << toml_escape(common->data)
                 << "\"\nlr_theta = " << cfg->lr_theta << "\nlr_eta = " << cfg->lr_eta
                 << "\ngamma_bar = " << cfg->gamma_bar
                 << "\nweight_decay = " << cfg->weight_decay << "\nratio = " << cfg->ratio
                 << "\npretrain = " << cfg->pretrain_steps << "\nsteps = " << cfg->train_steps
                 << "\nbatch_size = " << cfg->batch_size
                 << "\nlambda = " << cfg->relax.temperature
                 << "\nkappa = " << cfg->relax.control_scale << "\nseed = " << cfg->seed << '\n';
            result.record.config_toml = toml.str();
            save_run_record(result.record, common->out);

            if (!result.record.failed) {
                LeakageAssessment gamma_assessment;
                gamma_assessment.scores = result.final_gamma;
                gamma_assessment.method = "all-gamma";
                gamma_assessment.seed = cfg->seed;
                save_assessment(gamma_assessment,
                                (fs::path(common->out) / "assessment.csv").string());
            }
            guard.committed = true;
            if (result.record.failed) {
                std::cerr << "run failed: " << result.record.failure_reason << '\n';
                std::exit(1);
            }
            std::cout << "final gamma written to " << common->out << "/assessment.csv\n";
        });
    }
}

// --- assess ---------------------------------------------------------------

void setup_assess(CLI::App& app) {
    auto* cmd = app.add_subcommand("assess", "Compute a leakage assessment");
    auto method = std::make_shared<std::string>();
    auto data_path = std::make_shared<std::string>();
    auto model_path = std::make_shared<std::string>();
    auto run_dir = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<uint64_t>(default_seed());
    cmd->add_option("--method", *method, "snr|sosd|cpa|gradvis|saliency|occlusion1|inputxgrad|lrp|all-gamma")
        ->required();
    cmd->add_option("--data", *data_path, "input .scld dataset");
    cmd->add_option("--model", *model_path, "LLMD checkpoint (attribution methods)");
    cmd->add_option("--run", *run_dir, "run directory (all-gamma)");
    cmd->add_option("--out", *out, "output assessment CSV")->required();
    cmd->add_option("--seed", *seed, "seed recorded in the CSV");
    cmd->callback([method, data_path, model_path, run_dir, out, seed] {
        OutputGuard guard;
        guard.track(*out);
        LeakageAssessment assessment;
        if (*method == "snr" || *method == "sosd" || *method == "cpa") {
            if (data_path->empty()) throw CLI::ValidationError("--data is required");
            TraceDataset ds = load_dataset(*data_path);
            assessment = *method == "snr" ? snr(ds) : *method == "sosd" ? sosd(ds) : cpa(ds);
        } else if (*method == "all-gamma") {
            if (run_dir->empty()) throw CLI::ValidationError("--run is required for all-gamma");
            RunRecord record = load_run_record(*run_dir);
            if (record.gamma_log.empty())
                throw IoError("run has no gamma trajectory: " + *run_dir);
            assessment.scores = record.gamma_log.back().second;
            assessment.method = "all-gamma";
        } else {
            if (data_path->empty() || model_path->empty())
                throw CLI::ValidationError("--data and --model are required");
            TraceDataset ds = load_standardized(*data_path);
            Mlp model = load_checkpoint(*model_path);
            assessment = attribute(*method, model, ds);
        }
        assessment.seed = *seed;
        save_assessment(assessment, *out);
        guard.committed = true;
        std::cout << "wrote " << *out << '\n';
    });
}

// --- eval ---------------------------------------------------------------

void setup_eval(CLI::App& app) {
    auto* eval = app.add_subcommand("eval", "Evaluate an assessment or model");
    eval->require_subcommand(1);

    {
        auto* cmd = eval->add_subcommand("ogmm", "sliding-window omniscient GMM profile");
        auto data_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto window = std::make_shared<Index>(5);
        auto seed = std::make_shared<uint64_t>(default_seed());
        cmd->add_option("--data", *data_path, "dataset with share_ columns")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", *out, "output profile CSV")->required();
        cmd->add_option("--window", *window, "window width");
        cmd->add_option("--seed", *seed, "split seed");
        cmd->callback([data_path, out, window, seed] {
            OutputGuard guard;
            guard.track(*out);
            TraceDataset ds = load_dataset(*data_path);
            const Vector profile = ogmm_assessment(ds, *window, *seed);
            std::ofstream f(*out, std::ios::binary);
            f << "window_start,mi\n";
            for (Index i = 0; i < profile.size(); ++i) f << i << ',' << profile[i] << '\n';
            if (!f) throw IoError("write failed: " + *out);
            guard.committed = true;
            std::cout << "wrote " << *out << '\n';
        });
    }
    {
        auto* cmd = eval->add_subcommand("spearman", "rank-correlate assessment with profile");
        auto assessment_path = std::make_shared<std::string>();
        auto profile_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto window = std::make_shared<Index>(5);
        cmd->add_option("--assessment", *assessment_path, "assessment CSV")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--profile", *profile_path, "oGMM profile CSV")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--window", *window, "window width used for the profile");
        cmd->add_option("--out", *out, "output metrics JSON");
        cmd->callback([assessment_path, profile_path, out, window] {
            LeakageAssessment assessment = load_assessment(*assessment_path);
            std::ifstream f(*profile_path);
            if (!f) throw IoError("cannot open " + *profile_path);
            std::string line;
            std::getline(f, line);
            std::vector<double> vals;
            while (std::getline(f, line)) {
                const auto comma = line.find(',');
                if (comma == std::string::npos) continue;
                vals.push_back(std::stod(line.substr(comma + 1)));
            }
            Vector profile =
                Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
            const double rho = compare_to_ogmm(assessment.scores, profile, *window);
            json j{{"method", assessment.method}, {"spearman", rho}};
            std::cout << j.dump() << '\n';
            if (!out->empty()) {
                OutputGuard guard;
                guard.track(*out);
                write_json(*out, j);
                guard.committed = true;
            }
        });
    }
    {
        auto* cmd = eval->add_subcommand("occlusion", "forward/reverse occlusion curve");
        auto assessment_path = std::make_shared<std::string>();
        auto data_path = std::make_shared<std::string>();
        auto model_path = std::make_shared<std::string>();
        auto direction_name = std::make_shared<std::string>("forward");
        auto out = std::make_shared<std::string>();
        auto steps = std::make_shared<long>(2000);
        auto seed = std::make_shared<uint64_t>(default_seed());
        cmd->add_option("--assessment", *assessment_path, "assessment CSV")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--data", *data_path, "evaluation dataset")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--model", *model_path,
                        "masked-input LLMD checkpoint; trained inline when omitted");
        cmd->add_option("--direction", *direction_name, "forward|reverse");
        cmd->add_option("--train-steps", *steps, "inline occluded-model training steps");
        cmd->add_option("--seed", *seed, "rng seed (inline training and split)");
        cmd->add_option("--out", *out, "output curve CSV")->required();
        cmd->callback([assessment_path, data_path, model_path, direction_name, out, steps,
                       seed] {
            OutputGuard guard;
            guard.track(*out);
            const LeakageAssessment assessment = load_assessment(*assessment_path);
            TraceDataset ds = load_standardized(*data_path);
            auto parts = split(ds, {0.8, 0.2}, *seed);
            Mlp model;
            if (!model_path->empty()) {
                model = load_checkpoint(*model_path);
            } else {
                MaskedSupervisedConfig cfg;
                cfg.steps = *steps;
                cfg.batch_size = std::min<Index>(1000, parts[0].n());
                cfg.seed = *seed + 1;  // decoupled from any assessment seed
                DatasetSampler sampler(parts[0]);
                model = train_masked_supervised(sampler, parts[1], cfg);
            }
            const OcclusionDirection dir = *direction_name == "reverse"
                                               ? OcclusionDirection::Reverse
                                               : OcclusionDirection::Forward;
            const OcclusionCurve curve = occlusion_test(model, parts[1], assessment, dir);
            curve.save_csv(*out);
            guard.committed = true;
            json j{{"method", assessment.method},
                   {"direction", *direction_name},
                   {"auc", curve.auc}};
            std::cout << j.dump() << '\n';
        });
    }
    {
        auto* cmd = eval->add_subcommand("key-rank", "key-rank accumulation curve");
        auto data_path = std::make_shared<std::string>();
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto true_key = std::make_shared<int>(-1);
        cmd->add_option("--data", *data_path, "attack dataset with plaintext column")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--model", *model_path, "supervised LLMD checkpoint")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--true-key", *true_key, "true key byte")->required();
        cmd->add_option("--out", *out, "output curve CSV")->required();
        cmd->callback([data_path, model_path, out, true_key] {
            if (*true_key < 0 || *true_key > 255)
                throw CLI::ValidationError("--true-key must be a byte");
            OutputGuard guard;
            guard.track(*out);
            TraceDataset ds = load_standardized(*data_path);
            Mlp model = load_checkpoint(*model_path);
            const auto ranks =
                key_rank_accumulation(model, ds, static_cast<uint8_t>(*true_key));
            std::ofstream f(*out, std::ios::binary);
            f << "traces,rank\n";
            for (size_t i = 0; i < ranks.size(); ++i) f << (i + 1) << ',' << ranks[i] << '\n';
            if (!f) throw IoError("write failed: " + *out);
            guard.committed = true;
            std::cout << "final rank " << ranks.back() << " after " << ranks.size()
                      << " traces\n";
        });
    }
}

// --- sweep ---------------------------------------------------------------

void setup_sweep(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "random hyperparameter search for supervised training");
    auto data_path = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto trials = std::make_shared<int>(5);
    auto steps = std::make_shared<long>(1000);
    auto batch = std::make_shared<Index>(256);
    auto hidden = std::make_shared<std::vector<Index>>(std::vector<Index>{100});
    auto seed = std::make_shared<uint64_t>(default_seed());
    cmd->add_option("--data", *data_path, "input .scld dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", *out, "sweep output directory")->required();
    cmd->add_option("--trials", *trials, "trial count")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", *steps, "training steps per trial");
    cmd->add_option("--batch-size", *batch, "minibatch size");
    cmd->add_option("--hidden", *hidden, "hidden layer widths");
    cmd->add_option("--seed", *seed, "search seed");
    cmd->callback([data_path, out, trials, steps, batch, hidden, seed] {
        OutputGuard guard;
        guard.track(*out);
        fs::create_directories(*out);

        TraceDataset ds = load_standardized(*data_path);
        auto parts = split(ds, {0.8, 0.2}, *seed);
        DatasetSampler sampler(parts[0]);

        const std::vector<double> lrs = {1e-4, 3e-4, 1e-3, 3e-3};
        const std::vector<double> beta1s = {0.5, 0.9, 0.99};
        const std::vector<double> decays = {0.0, 1e-4, 1e-2};
        const std::vector<LrSchedule::Kind> schedules = {LrSchedule::Kind::Constant,
                                                         LrSchedule::Kind::CosineAnnealing};
        Rng rng(*seed);
        std::vector<TrialSummary> summaries;
        json report;
        report["trials"] = json::array();
        for (int i = 0; i < *trials; ++i) {
            SupervisedConfig cfg;
            cfg.hidden = *hidden;
            cfg.lr = lrs[rng() % lrs.size()];
            cfg.beta1 = beta1s[rng() % beta1s.size()];
            cfg.weight_decay = decays[rng() % decays.size()];
            cfg.schedule = schedules[rng() % schedules.size()];
            cfg.steps = *steps;
            cfg.batch_size = *batch;
            cfg.seed = *seed + static_cast<uint64_t>(i) + 1;
            SupervisedResult result = train_supervised(sampler, parts[1], cfg);

            TrialSummary summary;
            summary.min_val_rank = result.record.best_val_rank;
            summary.val_loss = validation_loss(result.model, parts[1]);
            summaries.push_back(summary);
            report["trials"].push_back({{"trial", i},
                                        {"lr", cfg.lr},
                                        {"beta1", cfg.beta1},
                                        {"weight_decay", cfg.weight_decay},
                                        {"schedule",
                                         cfg.schedule == LrSchedule::Kind::Constant
                                             ? "constant"
                                             : "cosine"},
                                        {"min_val_rank", summary.min_val_rank},
                                        {"val_loss", summary.val_loss},
                                        {"failed", result.record.failed}});
            save_checkpoint(result.model,
                            (fs::path(*out) / ("trial" + std::to_string(i) + ".llmd")).string());
        }
        const size_t best = select_best_trial(summaries);
        report["selected"] = best;
        write_json(fs::path(*out) / "sweep.json", report);
        guard.committed = true;
        std::cout << "selected trial " << best << '\n';
    });
}

// --- report ---------------------------------------------------------------

void setup_report(CLI::App& app) {
    auto* cmd = app.add_subcommand("report", "Render SVG plots from a run directory");
    auto run_dir = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    auto curve_path = std::make_shared<std::string>();
    cmd->add_option("--run", *run_dir, "run directory")->required();
    cmd->add_option("--out", *out, "output directory")->required();
    cmd->add_option("--occlusion", *curve_path, "occlusion curve CSV to plot");
    cmd->callback([run_dir, out, curve_path] {
        OutputGuard guard;
        fs::create_directories(*out);
        RunRecord record = load_run_record(*run_dir);

        if (!record.metrics.empty()) {
            LinePlot plot;
            plot.title = "training loss";
            plot.x_label = "step";
            plot.y_label = "loss";
            LinePlot::Series s{"loss", {}};
            for (const auto& row : record.metrics) {
                plot.x.push_back(static_cast<double>(row.step));
                s.y.push_back(row.loss);
            }
            plot.series.push_back(std::move(s));
            const fs::path p = fs::path(*out) / "loss.svg";
            guard.track(p);
            plot.save(p.string());
        }
        if (!record.gamma_log.empty()) {
            {
                LinePlot plot;
                plot.title = "final erasure probabilities";
                plot.x_label = "t";
                plot.y_label = "gamma";
                const Vector& gamma = record.gamma_log.back().second;
                LinePlot::Series s{"gamma", {}};
                for (Index i = 0; i < gamma.size(); ++i) {
                    plot.x.push_back(static_cast<double>(i));
                    s.y.push_back(gamma[i]);
                }
                plot.series.push_back(std::move(s));
                const fs::path p = fs::path(*out) / "gamma_final.svg";
                guard.track(p);
                plot.save(p.string());
            }
            {
                LinePlot plot;
                plot.title = "gamma trajectory";
                plot.x_label = "step";
                plot.y_label = "gamma";
                const Index t = record.gamma_log.front().second.size();
                for (const auto& [step, gamma] : record.gamma_log)
                    plot.x.push_back(static_cast<double>(step));
                for (Index j = 0; j < t; ++j) {
                    LinePlot::Series s{"g" + std::to_string(j + 1), {}};
                    for (const auto& [step, gamma] : record.gamma_log) s.y.push_back(gamma[j]);
                    plot.series.push_back(std::move(s));
                }
                const fs::path p = fs::path(*out) / "gamma_trajectory.svg";
                guard.track(p);
                plot.save(p.string());
            }
        }
        if (!curve_path->empty()) {
            std::ifstream f(*curve_path);
            if (!f) throw IoError("cannot open " + *curve_path);
            std::string line;
            std::getline(f, line);
            LinePlot plot;
            plot.title = "occlusion test";
            plot.x_label = "unmasked features";
            plot.y_label = "mean rank";
            LinePlot::Series s{"rank", {}};
            while (std::getline(f, line)) {
                std::stringstream ss(line);
                std::string a, b;
                if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
                plot.x.push_back(std::stod(a));
                s.y.push_back(std::stod(b));
            }
            plot.series.push_back(std::move(s));
            const fs::path p = fs::path(*out) / "occlusion.svg";
            guard.track(p);
            plot.save(p.string());
        }
        guard.committed = true;
        std::cout << "plots written to " << *out << '\n';
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"leaklock: side-channel leakage localization toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file with flag defaults");

    setup_gen(app);
    setup_train(app);
    setup_assess(app);
    setup_eval(app);
    setup_sweep(app);
    setup_report(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

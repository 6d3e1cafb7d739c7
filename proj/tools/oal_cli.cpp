#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oal/cli/commands.hpp"

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    std::string scores;
    std::string kd_direction;
    std::vector<std::string> sets;
    bool force = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_force) {
    cmd->add_option("--config", c.config, "Flat key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Experiment seed (overrides the config)");
    cmd->add_option("--out", c.out, "Output directory (overrides the config)");
    cmd->add_option("--scores", c.scores, "Comma list of msp,ebo,gen,knn");
    cmd->add_option("--kd-direction", c.kd_direction, "paper or reverse")->check(CLI::IsMember({"paper", "reverse"}));
    cmd->add_option("--set", c.sets, "Extra key=value overrides");
    if (with_force) cmd->add_flag("--force", c.force, "Accept artifacts produced by a different config or seed");
}

oal::ExperimentConfig resolve(const Common& c, const CLI::App* cmd) {
    oal::ExperimentConfig cfg = c.config.empty() ? oal::ExperimentConfig{} : oal::load_config(c.config);
    if (cmd->count("--seed")) cfg.seed = c.seed;
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.scores.empty()) cfg.set("score.kinds", c.scores);
    if (!c.kd_direction.empty()) cfg.set("idkd.direction", c.kd_direction);
    for (const auto& kv : c.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OOD detection with outlier-aware distillation: data, training, evaluation and oracles"};
    app.require_subcommand(1);
    Common c;

    auto* gen_data = app.add_subcommand("gen-data", "Generate the ID mixture and the OOD test sets");
    add_common(gen_data, c, false);
    auto* teacher = app.add_subcommand("teacher-train", "Train the frozen teacher and export its features");
    add_common(teacher, c, true);
    auto* synth = app.add_subcommand("synth-outliers", "Sample k-NN boundary outliers in teacher feature space");
    add_common(synth, c, true);
    auto* latents = app.add_subcommand("gen-latents", "Generate guided latent outliers");
    add_common(latents, c, true);

    auto* train = app.add_subcommand("train", "Train the student with OAL and the vanilla baseline");
    add_common(train, c, true);
    bool ablation = false, no_vanilla = false;
    train->add_flag("--ablation", ablation, "Also run module rows (i)-(v) under every configured score");
    train->add_flag("--no-vanilla", no_vanilla, "Skip the vanilla baseline");

    auto* eval = app.add_subcommand("eval", "Score a trained student against every OOD set");
    add_common(eval, c, true);
    std::string tag = "oal";
    eval->add_option("--model", tag, "Student tag: oal, vanilla or ablation-<row>");

    auto* report = app.add_subcommand("report", "Aggregate per-seed metrics files into mean and std tables");
    add_common(report, c, false);
    std::vector<std::string> inputs;
    report->add_option("inputs", inputs, "metrics_*.json files")->required();

    auto* verify = app.add_subcommand("verify-oracles", "Run the brute-force and analytic oracle suite");
    std::uint64_t verify_seed = 0;
    bool inject = false;
    verify->add_option("--seed", verify_seed, "Oracle seed");
    verify->add_flag("--inject-fault", inject, "Perturb one analytic gradient (must fail)");

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage from gen-data to eval");
    add_common(pipeline, c, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return oal::cmd_verify_oracles(verify_seed, inject, std::cout) ? 0 : 1;
        CLI::App* cmd = app.get_subcommands().front();
        const oal::ExperimentConfig cfg = resolve(c, cmd);
        if (gen_data->parsed()) oal::cmd_gen_data(cfg, std::cout);
        if (teacher->parsed()) oal::cmd_teacher_train(cfg, c.force, std::cout);
        if (synth->parsed()) oal::cmd_synth_outliers(cfg, c.force, std::cout);
        if (latents->parsed()) oal::cmd_gen_latents(cfg, c.force, std::cout);
        if (train->parsed()) {
            oal::TrainOptions opts;
            opts.vanilla = !no_vanilla;
            opts.ablation = ablation;
            opts.force = c.force;
            oal::cmd_train(cfg, opts, std::cout);
        }
        if (eval->parsed()) oal::cmd_eval(cfg, tag, c.force, std::cout);
        if (report->parsed()) {
            oal::cmd_report(inputs, cfg.out, std::cout);
            std::ofstream(std::filesystem::path(cfg.out) / "config.resolved") << cfg.resolved();
        }
        if (pipeline->parsed()) oal::cmd_pipeline(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "nadir/pipeline.hpp"
#include "nadir/synth.hpp"

namespace {

int fail(const std::string& category, const std::string& message) {
    std::fprintf(stderr, "error: %s: %s\n", category.c_str(), message.c_str());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aerial traffic analysis pipeline"};
    app.require_subcommand(1);

    std::string config_path, gt_path, scenario_path, out_dir;

    CLI::App* run_cmd = app.add_subcommand("run", "run the full pipeline");
    run_cmd->add_option("--config", config_path, "pipeline config (json)")->required();

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score pipeline outputs against ground truth");
    eval_cmd->add_option("--config", config_path, "pipeline config (json)")->required();
    eval_cmd->add_option("--gt", gt_path, "ground truth json")->required();

    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic scenario");
    synth_cmd->add_option("--scenario", scenario_path, "scenario config (json)")->required();
    synth_cmd->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            auto cfg = nadir::pipeline::load_config(config_path);
            auto summary = nadir::pipeline::run(cfg);
            std::printf("frames=%d detections=%d tracks=%d confirmed=%d events=%d evaluated=%s\n",
                        summary.frames, summary.detections, summary.tracks_total,
                        summary.tracks_confirmed, summary.events,
                        summary.evaluated ? "yes" : "no");
        } else if (eval_cmd->parsed()) {
            auto cfg = nadir::pipeline::load_config(config_path);
            auto mot = nadir::pipeline::evaluate(cfg, gt_path);
            std::printf("mota=%.4f motp=%.4f precision=%.4f recall=%.4f id_switches=%lld\n",
                        mot.mota, mot.motp, mot.precision, mot.recall,
                        static_cast<long long>(mot.id_switches));
        } else if (synth_cmd->parsed()) {
            auto scfg = nadir::synth::load_scenario(scenario_path);
            auto out = nadir::synth::generate(scfg);
            nadir::synth::write_outputs(out, scfg, out_dir);
            std::printf("frames=%zu tracks=%zu violations=%zu\n", out.frames.size(),
                        out.gt.tracks.size(), out.gt.violations.size());
        }
    } catch (const std::invalid_argument& e) {
        return fail("invalid", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}

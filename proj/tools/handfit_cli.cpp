// Copyright 2026 The handfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// handfit command line: fit | synth | eval | ablate
//
// exit codes: 0 success, 2 usage error, 3 validation / input error, 4 no frame annotated

#include "handfit/handfit.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace handfit;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNothingAnnotated = 4;

HandModel load_model(const PipelineConfig& config, Handedness hand)
{
    if (config.model.empty()) {
        return build_default_model(hand);
    }
    auto m = load_model_asset(config.model);
    return m.handedness == hand ? m : mirror_model(std::move(m));
}

PipelineConfig config_or_default(const std::string& path)
{
    return path.empty() ? PipelineConfig{} : load_config(path);
}

int run_fit(const std::string& session_dir, const std::string& config_path, const std::string& out, const std::string& hand)
{
    const auto config = config_or_default(config_path);
    Session session = load_session(session_dir);
    session.rig = config.apply_alpha(session.rig);

    std::vector<Handedness> hands;
    if (hand == "right" || hand == "both") {
        hands.push_back(Handedness::right);
    }
    if (hand == "left" || hand == "both") {
        hands.push_back(Handedness::left);
    }
    const auto right_model = load_model(config, Handedness::right);
    const auto left_model = load_model(config, Handedness::left);
    const HandEvaluator right(right_model);
    const HandEvaluator left(left_model);
    const auto limits = config.joint_limits(right_model);

    const auto annotation = fit_sequence(session, right, left, config.weights, limits, config.optimizer, hands);
    save_annotations(out, annotation);

    for (auto h : hands) {
        const auto& track = annotation.track(h);
        if (!track) {
            continue;
        }
        std::size_t converged = 0;
        for (const auto& f : track->frames) {
            converged += f && f->converged ? 1 : 0;
        }
        std::cout << to_string(h) << ": annotated " << track->annotated() << "/" << annotation.frame_count
                  << " frames, converged " << converged << "\n";
    }
    return annotation.annotated() == 0 ? kExitNothingAnnotated : kExitOk;
}

int run_synth(const std::string& out, SynthConfig sc)
{
    namespace fs = std::filesystem;
    const auto model = build_default_model(sc.hand);
    const auto [session, gt] = generate_session(sc, model);
    save_session(out, session, sc.hand);
    save_ground_truth(fs::path(out) / "gt.json", gt);
    std::cout << "wrote " << session.frames.size() << " frames x " << session.rig.size() << " views to " << out << "\n";
    return kExitOk;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, MetricsSettings settings, const std::string& out)
{
    const auto annotation = load_annotations(pred_path);
    const auto gt = load_ground_truth(gt_path);
    if (annotation.frame_count != gt.frames.size()) {
        throw Error(Errc::shape_mismatch, "annotation has " + std::to_string(annotation.frame_count)
                                              + " frames, ground truth " + std::to_string(gt.frames.size()));
    }
    std::vector<std::optional<JointSet>> pred(gt.frames.size());
    if (const auto& track = annotation.track(gt.hand)) {
        for (std::size_t t = 0; t < pred.size(); ++t) {
            if (track->frames[t]) {
                pred[t] = track->frames[t]->joints;
            }
        }
    }
    std::vector<JointSet> truth;
    for (const auto& f : gt.frames) {
        truth.push_back(f.joints);
    }
    const auto report = evaluate_predictions(pred, truth, settings);
    const auto text = format_report(report, settings);
    std::cout << text;
    if (!out.empty()) {
        detail::write_text(out, text);
    }
    return kExitOk;
}

int run_ablate(const std::string& session_dir, const std::string& gt_path, const std::string& config_path,
               const std::string& out)
{
    const auto config = config_or_default(config_path);
    const Session session = load_session(session_dir);
    const auto gt = load_ground_truth(gt_path);
    const auto model = load_model(config, gt.hand);
    const HandEvaluator hand(model);
    const auto text = format_ablation(run_ablation(session, gt, config, hand));
    std::cout << text;
    detail::write_text(out, text);
    return kExitOk;
}

int exit_code_for(Errc code)
{
    return code == Errc::usage_error ? kExitUsage : kExitValidation;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-view hand model fitting toolkit"};
    app.require_subcommand(1);

    auto* fit = app.add_subcommand("fit", "Fit the hand model to every frame of a session");
    std::string session_dir, config_path, out, hand = "right";
    bool print_config = false;
    fit->add_option("--session", session_dir, "Session directory");
    fit->add_option("--config", config_path, "Pipeline config file (defaults when omitted)");
    fit->add_option("--out", out, "Annotation file to write");
    fit->add_option("--hand", hand, "Hands to fit")->check(CLI::IsMember({"left", "right", "both"}));
    fit->add_flag("--print-config", print_config, "Print the effective configuration and exit");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic session with ground truth");
    SynthConfig sc;
    std::string synth_out, synth_hand = "right";
    double dropout = 0.0;
    synth->add_option("--out", synth_out, "Output session directory")->required();
    synth->add_option("--frames", sc.frames, "Frame count")->check(CLI::PositiveNumber);
    synth->add_option("--views", sc.views, "Camera count")->check(CLI::PositiveNumber);
    synth->add_option("--seed", sc.seed, "Random seed");
    synth->add_option("--joint-noise-px", sc.joint_noise_px, "2D joint noise sigma (pixels)")->check(CLI::NonNegativeNumber);
    synth->add_option("--cloud-noise-m", sc.cloud_noise_m, "Point cloud noise sigma (meters)")->check(CLI::NonNegativeNumber);
    synth->add_option("--dropout", dropout, "Probability a 2D joint is missing")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--cloud-points", sc.cloud_points, "Points per cloud")->check(CLI::NonNegativeNumber);
    synth->add_option("--motion-scale", sc.motion_scale, "Random-walk step per DoF (radians)")->check(CLI::NonNegativeNumber);
    synth->add_option("--hand", synth_hand, "Hand to generate")->check(CLI::IsMember({"left", "right"}));

    auto* eval = app.add_subcommand("eval", "Score annotations against ground truth");
    std::string pred_path, gt_path, eval_out;
    MetricsSettings settings;
    eval->add_option("--pred", pred_path, "Annotation file")->required();
    eval->add_option("--gt", gt_path, "Ground truth file (gt.json)")->required();
    eval->add_option("--max-threshold-mm", settings.max_threshold_mm, "PCK range, camera space")->check(CLI::PositiveNumber);
    eval->add_option("--max-threshold-ra-mm", settings.max_threshold_ra_mm, "PCK range, root aligned")->check(CLI::PositiveNumber);
    eval->add_option("--steps", settings.steps, "PCK thresholds")->check(CLI::Range(2, 1000000));
    eval->add_option("--out", eval_out, "Also write the report to this file");

    auto* ablate = app.add_subcommand("ablate", "Run the six-configuration term ablation");
    std::string ab_session, ab_gt, ab_config, ab_out;
    ablate->add_option("--session", ab_session, "Session directory")->required();
    ablate->add_option("--gt", ab_gt, "Ground truth file (gt.json)")->required();
    ablate->add_option("--config", ab_config, "Pipeline config file");
    ablate->add_option("--out", ab_out, "Table file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (fit->parsed()) {
            if (print_config) {
                std::cout << format_config(config_or_default(config_path));
                return kExitOk;
            }
            if (session_dir.empty() || out.empty()) {
                std::cerr << "fit: --session and --out are required\n";
                return kExitUsage;
            }
            return run_fit(session_dir, config_path, out, hand);
        }
        if (synth->parsed()) {
            sc.dropout_rate = dropout;
            sc.hand = synth_hand == "left" ? Handedness::left : Handedness::right;
            return run_synth(synth_out, sc);
        }
        if (eval->parsed()) {
            return run_eval(pred_path, gt_path, settings, eval_out);
        }
        if (ablate->parsed()) {
            return run_ablate(ab_session, ab_gt, ab_config, ab_out);
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

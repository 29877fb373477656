#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <mdag/io.hpp>
#include <mdag/mdag.hpp>

namespace {

using namespace mdag;

struct FitFlags {
    std::string data;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<std::string> schedule;
    std::optional<std::string> noise_bounds;
    std::optional<std::string> family;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool with_k) {
    cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Root random seed");
    if (with_k) cmd->add_option("--k", f.k, "Number of Gaussian components");
    cmd->add_option("--schedule", f.schedule, "Search schedule, e.g. ((EM)^10 EcS*M)*");
    cmd->add_option("--noise-bounds", f.noise_bounds, "Uniform noise box lo:hi[,lo:hi...]");
    cmd->add_option("--family", f.family, "mdag, mdiag or mfull");
}

FitConfig resolve_config(const FitFlags& f, int n) {
    FitConfig c = f.config.empty() ? FitConfig{} : load_config(f.config, n);
    if (f.seed) c.seed = *f.seed;
    if (f.k) c.k = *f.k;
    if (f.schedule) c.schedule = Schedule::parse(*f.schedule);
    if (f.noise_bounds) c.noise = parse_noise_bounds(*f.noise_bounds, n);
    if (f.family) c.family = parse_family(*f.family);
    c.validate();
    return c;
}

void write_json(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

void print_trace(std::ostream& out, const FitResult& r) {
    out << "iteration,em_steps,forced,observed_loglik,complete_score,cheeseman_stutz,structure_changed\n";
    for (std::size_t t = 0; t < r.trace.size(); ++t) {
        const auto& it = r.trace[t];
        out << t << ',' << it.em_steps << ',' << it.forced_convergence << ',' << detail::format_real(it.observed_loglik) << ','
            << detail::format_real(it.complete_score) << ',' << detail::format_real(it.cheeseman_stutz) << ',' << it.structure_changed
            << '\n';
    }
    out << "# termination " << to_string(r.termination) << ", best iteration " << r.best_iteration << ", cheeseman-stutz "
        << detail::format_real(r.cheeseman_stutz) << '\n';
}

ModelFile model_file(const Dataset& data, const FitConfig& config, const FitResult& r, int k) {
    json meta = {{"config", to_json(config)},
                 {"k", k},
                 {"cheeseman_stutz", r.cheeseman_stutz},
                 {"termination", to_string(r.termination)},
                 {"warnings", r.warnings}};
    return {r.model, data.names, meta};
}

int run(int argc, char** argv) {
    CLI::App app{"Learn mixtures of Gaussian DAG models"};
    app.require_subcommand(1);

    FitFlags fit_flags;
    std::string trace_path;
    auto* fit_cmd = app.add_subcommand("fit", "Fit an MDAG with a fixed component count");
    fit_cmd->add_option("--data", fit_flags.data, "Training CSV")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("--out", fit_flags.out, "Output model file")->required();
    fit_cmd->add_option("--trace", trace_path, "Write the outer-iteration trace as JSON");
    add_fit_flags(fit_cmd, fit_flags, true);

    std::string score_model, score_test;
    auto* score_cmd = app.add_subcommand("score", "Log predictive score per case of a model on test data");
    score_cmd->add_option("--model", score_model, "Model file")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--test", score_test, "Test CSV")->required()->check(CLI::ExistingFile);

    std::string gen_model, gen_out;
    Eigen::Index gen_count = 1000;
    std::uint64_t gen_seed = 0;
    auto* gen_cmd = app.add_subcommand("generate", "Sample cases from a model file or the default gold standard");
    gen_cmd->add_option("--model", gen_model, "Model file (default: gold standard)")->check(CLI::ExistingFile);
    gen_cmd->add_option("--count", gen_count, "Number of cases")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen_seed, "Random seed");
    gen_cmd->add_option("--out", gen_out, "Output CSV")->required();

    FitFlags sel_flags;
    int sel_kmax = 6;
    auto* sel_cmd = app.add_subcommand("select-k", "Choose the component count by Cheeseman-Stutz");
    sel_cmd->add_option("--data", sel_flags.data, "Training CSV")->required()->check(CLI::ExistingFile);
    sel_cmd->add_option("--out", sel_flags.out, "Output model file")->required();
    sel_cmd->add_option("--k", sel_kmax, "Largest component count tried")->check(CLI::PositiveNumber);
    add_fit_flags(sel_cmd, sel_flags, false);

    FitFlags rec_flags;
    int rec_kmax = 6;
    std::uint64_t rec_data_seed = 0;
    auto* rec_cmd = app.add_subcommand("recover", "Structure-recovery experiment on the gold standard");
    rec_cmd->add_option("--out", rec_flags.out, "Report file (default: stdout)");
    rec_cmd->add_option("--k", rec_kmax, "Largest component count tried")->check(CLI::PositiveNumber);
    rec_cmd->add_option("--data-seed", rec_data_seed, "Seed for the gold-standard samples");
    add_fit_flags(rec_cmd, rec_flags, false);

    FitFlags cmp_flags;
    std::string cmp_test;
    int cmp_kmax = 6;
    auto* cmp_cmd = app.add_subcommand("compare", "Predictive scores of MDAG against MDIAG and MFULL");
    cmp_cmd->add_option("--data", cmp_flags.data, "Training CSV")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--test", cmp_test, "Test CSV")->required()->check(CLI::ExistingFile);
    cmp_cmd->add_option("--out", cmp_flags.out, "Report file (default: stdout)");
    cmp_cmd->add_option("--k", cmp_kmax, "Largest component count tried")->check(CLI::PositiveNumber);
    add_fit_flags(cmp_cmd, cmp_flags, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (fit_cmd->parsed()) {
        const auto data = load_csv(fit_flags.data);
        const auto config = resolve_config(fit_flags, data.dims());
        const auto result = fit(data, config);
        save_model(fit_flags.out, model_file(data, config, result, config.k));
        if (!trace_path.empty()) write_json(trace_path, to_json(result));
        print_trace(std::cout, result);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    } else if (score_cmd->parsed()) {
        const auto file = load_model(score_model);
        const auto test = load_csv(score_test);
        if (test.dims() != file.model.dims()) throw Error(ErrorCode::DimensionMismatch, "test data and model have different widths");
        std::cout << "cases," << test.cases() << "\nlog_score_per_case," << detail::format_real(predictive_score(test, file.model)) << '\n';
    } else if (gen_cmd->parsed()) {
        Dataset d;
        if (gen_model.empty()) {
            d = sample(default_gold_standard().model, gen_count, gen_seed);
        } else {
            const auto file = load_model(gen_model);
            d = sample(file.model, gen_count, gen_seed);
            d.names = file.variables;
        }
        save_csv(gen_out, d);
    } else if (sel_cmd->parsed()) {
        const auto data = load_csv(sel_flags.data);
        const auto config = resolve_config(sel_flags, data.dims());
        const auto sel = select_k(data, config, sel_kmax);
        auto file = model_file(data, config, sel.best, sel.best_k);
        json per_k = json::array();
        for (const auto& r : sel.per_k)
            per_k.push_back({{"k", r.k}, {"cheeseman_stutz", r.cheeseman_stutz}, {"observed_loglik", r.observed_loglik},
                             {"termination", to_string(r.termination)}});
        file.metadata["per_k"] = per_k;
        save_model(sel_flags.out, file);
        std::cout << "k,cheeseman_stutz,observed_loglik,termination\n";
        for (const auto& r : sel.per_k)
            std::cout << r.k << ',' << detail::format_real(r.cheeseman_stutz) << ',' << detail::format_real(r.observed_loglik) << ','
                      << to_string(r.termination) << '\n';
        std::cout << "# chosen k " << sel.best_k << '\n';
    } else if (rec_cmd->parsed()) {
        RecoveryConfig rc;
        rc.fit = resolve_config(rec_flags, default_gold_standard().model.dims());
        rc.k_max = rec_kmax;
        rc.data_seed = rec_data_seed;
        write_json(rec_flags.out, to_json(run_recovery(default_gold_standard(), rc)));
    } else if (cmp_cmd->parsed()) {
        const auto train = load_csv(cmp_flags.data);
        const auto test = load_csv(cmp_test);
        if (test.dims() != train.dims()) throw Error(ErrorCode::DimensionMismatch, "training and test data have different widths");
        const auto config = resolve_config(cmp_flags, train.dims());
        write_json(cmp_flags.out, to_json(run_baseline_comparison(train, test, config, cmp_kmax)));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mdag::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mdag::is_numerical(e.code()) ? 3 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: Io: " << e.what() << '\n';
        return 2;
    }
}

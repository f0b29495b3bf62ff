#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kic/bench.hpp"
#include "kic/data.hpp"
#include "kic/errors.hpp"
#include "kic/estimators.hpp"
#include "kic/model.hpp"
#include "kic/verify.hpp"

namespace kic::cli {

namespace {

/// Bad flag values: reported like CLI11 parse errors (exit 2).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double parse_number(const std::string& text, const std::string& what) {
    std::string_view s = text;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw UsageError(what + ": '" + text + "' is not a number");
    return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) parts.push_back(item);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

Vector parse_vector(const std::string& text, const std::string& what) {
    const auto parts = split(text, ',');
    Vector v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_number(parts[i], what);
    return v;
}

// gaussian:v | uniform:lo:hi | feedback:K[:i] | decay:r[:u0] | zero | sequence:a,b,...
bench::InputPolicy parse_policy(const std::string& text, std::uint64_t seed, std::optional<double> probe) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    const auto args = rest.empty() ? std::vector<std::string>{} : split(rest, ':');
    auto arg = [&](std::size_t i) { return parse_number(args.at(i), "--policy " + name); };
    auto want = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi) throw UsageError("--policy " + name + ": wrong number of fields");
    };

    if (probe && name != "feedback") throw UsageError("--probe applies to feedback policies only");
    if (name == "gaussian") {
        want(1, 1);
        return bench::GaussianNoise{arg(0), seed};
    }
    if (name == "uniform") {
        want(2, 2);
        return bench::UniformNoise{arg(0), arg(1), seed};
    }
    if (name == "feedback") {
        want(1, 2);
        bench::StateFeedback fb{arg(0), 1, std::nullopt};
        if (args.size() == 2) fb.state_index = static_cast<int>(arg(1)) - 1;
        if (probe) fb.probe = Dither{*probe, seed};
        return fb;
    }
    if (name == "decay") {
        want(1, 2);
        return bench::ExpDecay{arg(0), args.size() == 2 ? arg(1) : 1.0};
    }
    if (name == "zero") {
        want(0, 0);
        return bench::ZeroInput{};
    }
    if (name == "sequence") {
        const Vector v = parse_vector(rest, "--policy sequence");
        return bench::Sequence{std::vector<double>(v.data(), v.data() + v.size())};
    }
    throw UsageError("unknown policy '" + name + "'");
}

void write_text(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
    if (!path) {
        out << text;
        return;
    }
    std::ofstream file(*path, std::ios::binary);
    if (!file) throw Error("cannot open '" + *path + "' for writing");
    file << text;
}

std::string csv_text(const Trajectory& traj) {
    std::ostringstream buf;
    write_csv(traj, buf);
    return buf.str();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct Globals {
    std::uint64_t seed = 0;
    std::optional<std::string> out;
    std::string format = "csv";
};

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string system;
    std::optional<double> mu, lambda, delta, beta, nu, gamma, dt, probe;
    std::optional<std::string> policy, x0, derivs_out;
    long steps = 0;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out) {
    if (a.steps < 1) throw UsageError("--steps must be at least 1");
    auto x0_or = [&](std::initializer_list<double> fallback) {
        if (a.x0) return parse_vector(*a.x0, "--x0");
        Vector v(static_cast<Eigen::Index>(fallback.size()));
        Eigen::Index i = 0;
        for (double x : fallback) v[i++] = x;
        return v;
    };

    if (a.system == "linear1") {
        if (a.beta || a.nu || a.gamma) throw UsageError("linear1 takes --mu, --lambda, --delta");
        if (a.dt && *a.dt != 1.0) throw UsageError("linear1 is a discrete map with dt = 1");
        if (a.derivs_out) throw UsageError("--derivs-out needs a continuous system");
        bench::LinearExampleParams p;
        p.mu = a.mu.value_or(p.mu);
        p.lambda = a.lambda.value_or(p.lambda);
        p.delta = a.delta.value_or(p.delta);
        const auto policy = parse_policy(a.policy.value_or("gaussian:0.01"), g.seed, a.probe);
        write_text(g.out, csv_text(bench::simulate_linear(p, policy, x0_or({5.0, 2.0}), a.steps)), out);
        return kOk;
    }
    if (a.system == "slowmanifold") {
        if (a.beta || a.nu || a.gamma) throw UsageError("slowmanifold takes --mu, --lambda, --delta");
        bench::SlowManifoldParams p;
        p.mu = a.mu.value_or(p.mu);
        p.lambda = a.lambda.value_or(p.lambda);
        p.delta = a.delta.value_or(p.delta);
        const auto policy = parse_policy(a.policy.value_or("gaussian:0.01"), g.seed, a.probe);
        const auto run = bench::simulate_slow_manifold(p, policy, x0_or({5.0, 2.0}), a.steps, a.dt.value_or(0.01));
        if (a.derivs_out)
            write_text(*a.derivs_out,
                       csv_text(Trajectory(run.state_derivatives, std::nullopt, run.trajectory.dt(), "derivs")), out);
        write_text(g.out, csv_text(run.trajectory), out);
        return kOk;
    }
    if (a.system == "sir") {
        if (a.lambda || a.delta) throw UsageError("sir takes --beta, --nu, --mu, --gamma");
        if (a.derivs_out) throw UsageError("--derivs-out needs the slowmanifold system");
        bench::SirParams p;
        p.beta = a.beta.value_or(p.beta);
        p.nu = a.nu.value_or(p.nu);
        p.mu = a.mu.value_or(p.mu);
        p.gamma = a.gamma.value_or(p.gamma);
        const auto policy = parse_policy(a.policy.value_or("uniform:0:0.005"), g.seed, a.probe);
        write_text(g.out, csv_text(bench::simulate_sir(p, policy, x0_or({0.99, 0.01, 0.0}), a.steps,
                                                         a.dt.value_or(0.01))),
                   out);
        return kOk;
    }
    throw UsageError("unknown system '" + a.system + "' (expected linear1, slowmanifold or sir)");
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string estimator = "kic";
    std::string kic_mode = "with-input-dynamics";
    std::optional<std::string> input_spec, output_spec, derivs, dither;
    std::string time_mode = "discrete";
    std::string truncation = "rel:1e-12";
    bool strict = false;
};

std::string summary_text(const KoopmanModel& m, const std::string& label) {
    std::ostringstream s;
    const auto& d = m.diagnostics();
    s << "estimator         " << label << "\n"
      << "time mode         " << to_string(m.time_mode()) << " (dt " << fmt(m.dt()) << ")\n"
      << "operator          " << m.p() << " x " << m.q() << " (" << to_string(m.shape_kind()) << ")\n"
      << "input terms       " << m.input_spec().to_string() << "\n"
      << "output terms      " << m.output_spec().to_string() << "\n"
      << "rank              " << d.rank << " of " << m.q() << (d.rank_deficient ? " (rank deficient)" : "") << "\n"
      << "spectral radius   " << fmt(m.spectral_radius()) << "\n"
      << "max row residual  " << fmt(d.max_residual()) << "\n"
      << "operator:\n";
    for (Eigen::Index r = 0; r < m.p(); ++r) {
        s << "  " << m.output_spec().terms()[static_cast<std::size_t>(r)].label() << ":";
        for (Eigen::Index c = 0; c < m.q(); ++c) s << ' ' << fmt(m.op()(r, c));
        s << "\n";
    }
    return s.str();
}

std::string summary_json(const KoopmanModel& m, const std::string& label) {
    const auto& d = m.diagnostics();
    nlohmann::json op = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.p(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.q(); ++c) row.push_back(m.op()(r, c));
        op.push_back(row);
    }
    nlohmann::json j{{"estimator", label},
                     {"rows", m.p()},
                     {"cols", m.q()},
                     {"shape", to_string(m.shape_kind())},
                     {"rank", d.rank},
                     {"rank_deficient", d.rank_deficient},
                     {"spectral_radius", m.spectral_radius()},
                     {"max_row_residual", d.max_residual()},
                     {"row_residuals", d.row_residuals},
                     {"operator", op}};
    return j.dump(2) + "\n";
}

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
    if (!g.out) throw UsageError("fit needs --out for the model file");
    const Trajectory traj = load_csv(a.data);

    FitOptions opts;
    try {
        opts.truncation = TruncationRule::parse(a.truncation);
    } catch (const ParseError& e) {
        throw UsageError(std::string("--truncation: ") + e.what());
    }
    opts.time_mode = a.time_mode == "continuous" ? TimeMode::ContinuousDerivative : TimeMode::DiscreteMap;
    opts.dt = traj.dt();
    if (a.dither) opts.dither = Dither{parse_number(*a.dither, "--dither"), g.seed};
    const KicMode mode = a.kic_mode == "no-input-dynamics" ? KicMode::NoInputDynamics : KicMode::WithInputDynamics;

    const bool lifted = a.input_spec || a.output_spec || opts.time_mode == TimeMode::ContinuousDerivative;
    std::optional<KoopmanModel> model;
    std::string label = a.estimator;

    if (lifted) {
        const int n_x = static_cast<int>(traj.state_dim());
        const int n_u = static_cast<int>(traj.input_dim());
        const ObservableSpec in = a.input_spec ? ObservableSpec::parse(*a.input_spec, n_x, n_u)
                                               : ObservableSpec::identity(n_x, a.estimator == "dmd" ? 0 : n_u);
        const ObservableSpec out_spec = a.output_spec ? ObservableSpec::parse(*a.output_spec, n_x, n_u)
                                                      : ObservableSpec(ObservableSpec::identity(n_x, 0).terms(), n_x, n_u);
        KicMode lifted_mode = mode;
        if (a.estimator == "dmd") {
            if (in.uses_inputs()) throw SpecError("dmd input terms must not use inputs");
            lifted_mode = KicMode::NoInputDynamics;
        } else if (a.estimator == "dmdc") {
            lifted_mode = KicMode::NoInputDynamics;
        }
        std::optional<Matrix> derivs;
        if (opts.time_mode == TimeMode::ContinuousDerivative) {
            if (!a.derivs) throw UsageError("continuous fits need --derivs");
            derivs = load_csv(*a.derivs).states();
        }
        model = fit_kic_lifted(traj, in, out_spec, lifted_mode, opts, derivs);
        if (a.estimator == "kic") label += " (" + to_string(lifted_mode) + ")";
    } else if (a.estimator == "dmd") {
        model = fit_dmd(build_pair(traj), opts);
    } else if (a.estimator == "dmdc") {
        model = fit_dmdc(build_trio(traj, false), opts);
    } else {
        model = fit_kic(build_trio(traj, mode == KicMode::WithInputDynamics), mode, opts);
        label += " (" + to_string(mode) + ")";
    }

    save_model(*model, *g.out);
    out << (g.format == "json" ? summary_json(*model, label) : summary_text(*model, label));
    if (a.strict && model->diagnostics().rank_deficient) {
        err << "error: regressor matrix is rank deficient (rank " << model->diagnostics().rank << " of "
            << model->q() << ")\n";
        return kStrictRank;
    }
    return kOk;
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string x0;
    long steps = 0;
    std::optional<std::string> inputs, policy;
    long inputs_offset = 0;
};

int cmd_predict(const PredictArgs& a, const Globals& g, std::ostream& out) {
    if (a.steps < 0) throw UsageError("--steps must be nonnegative");
    if (a.inputs && a.policy) throw UsageError("give --inputs or --policy, not both");
    const KoopmanModel model = load_model(a.model);
    const ObservableSpec& out_spec = model.output_spec();

    std::optional<Matrix> inputs;
    double t0 = 0.0;
    if (a.inputs) {
        const Trajectory src = load_csv(*a.inputs);
        if (!src.has_inputs()) throw UsageError("--inputs file has no input columns");
        if (a.inputs_offset < 0 || a.inputs_offset + a.steps > src.samples())
            throw UsageError("--inputs file has " + std::to_string(src.samples()) + " samples, need " +
                             std::to_string(a.inputs_offset + a.steps));
        inputs = src.inputs()->middleCols(a.inputs_offset, a.steps);
        t0 = src.t0() + static_cast<double>(a.inputs_offset) * src.dt();
    } else if (a.policy) {
        inputs = bench::policy_inputs(parse_policy(*a.policy, g.seed, std::nullopt), a.steps, model.dt());
    }

    // x0 is either the output vector itself or a raw state lifted through the
    // output dictionary.
    const Vector given = parse_vector(a.x0, "--x0");
    Vector x0;
    if (given.size() == model.p()) {
        x0 = given;
    } else if (given.size() == out_spec.n_x()) {
        std::optional<Matrix> u0;
        if (out_spec.uses_inputs()) {
            if (!inputs || inputs->cols() == 0) throw UsageError("--x0 as a state needs an input sample to lift");
            u0 = inputs->col(0);
        }
        x0 = lift(out_spec, given, u0).col(0);
    } else {
        throw UsageError("--x0 has " + std::to_string(given.size()) + " entries; the model expects " +
                         std::to_string(model.p()) + " outputs or " + std::to_string(out_spec.n_x()) + " states");
    }

    const Matrix predicted = predict(model, x0, inputs, a.steps);
    write_text(g.out, csv_text(Trajectory(predicted, std::nullopt, model.dt(), "prediction", t0)), out);
    return kOk;
}

// --- verify ----------------------------------------------------------------

int cmd_verify(double tolerance_scale, const Globals& g, std::ostream& out) {
    const auto results = run_verification(tolerance_scale);
    const std::string report =
        g.format == "json" ? verification_report_json(results) : verification_report_text(results);
    write_text(g.out, report, out);
    for (const auto& r : results)
        if (!r.passed()) return kVerifyFailed;
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Koopman operator identification with inputs"};
    app.name("kic");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random stream (default 0)");
    app.add_option("--out", g.out, "Output file (standard output when omitted)");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate a benchmark system to CSV");
    simulate->add_option("system", sim.system, "linear1 | slowmanifold | sir")->required();
    simulate->add_option("--mu", sim.mu);
    simulate->add_option("--lambda", sim.lambda);
    simulate->add_option("--delta", sim.delta);
    simulate->add_option("--beta", sim.beta);
    simulate->add_option("--nu", sim.nu);
    simulate->add_option("--gamma", sim.gamma);
    simulate->add_option("--dt", sim.dt);
    simulate->add_option("--x0", sim.x0, "Initial state, comma separated");
    simulate->add_option("--policy", sim.policy,
                         "gaussian:VAR | uniform:LO:HI | feedback:K[:I] | decay:RATE[:U0] | zero | sequence:A,B,...");
    simulate->add_option("--probe", sim.probe, "Dither amplitude applied to the plant input (feedback only)");
    simulate->add_option("--steps", sim.steps)->required();
    simulate->add_option("--derivs-out", sim.derivs_out, "Also write state derivatives (slowmanifold)");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a model from a trajectory CSV");
    fit_cmd->add_option("--data", fit.data)->required();
    fit_cmd->add_option("--estimator", fit.estimator)->check(CLI::IsMember({"dmd", "dmdc", "kic"}));
    fit_cmd->add_option("--kic-mode", fit.kic_mode)
        ->check(CLI::IsMember({"with-input-dynamics", "no-input-dynamics"}));
    fit_cmd->add_option("--input-spec", fit.input_spec, "Lifted input terms, e.g. x1,x2,x1^2,u1");
    fit_cmd->add_option("--output-spec", fit.output_spec, "Output terms, e.g. x1,x2,x1^2");
    fit_cmd->add_option("--time-mode", fit.time_mode)->check(CLI::IsMember({"discrete", "continuous"}));
    fit_cmd->add_option("--derivs", fit.derivs, "State derivative CSV for continuous fits");
    fit_cmd->add_option("--truncation", fit.truncation, "exact | rank:R | rel:TAU");
    fit_cmd->add_option("--dither", fit.dither, "Dither amplitude added to the input samples");
    fit_cmd->add_flag("--strict", fit.strict, "Exit 4 when the regressors are rank deficient");

    PredictArgs pred;
    auto* predict_cmd = app.add_subcommand("predict", "Roll a saved model forward");
    predict_cmd->add_option("--model", pred.model)->required();
    predict_cmd->add_option("--x0", pred.x0)->required();
    predict_cmd->add_option("--steps", pred.steps)->required();
    predict_cmd->add_option("--inputs", pred.inputs, "CSV whose input columns drive the prediction");
    predict_cmd->add_option("--inputs-offset", pred.inputs_offset, "First input sample to use");
    predict_cmd->add_option("--policy", pred.policy, "Input policy instead of --inputs");

    double tolerance_scale = 1.0;
    auto* verify = app.add_subcommand("verify", "Run the reproduction checks");
    verify->add_option("--tolerance-scale", tolerance_scale)->group("");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, g, out);
        if (*fit_cmd) return cmd_fit(fit, g, out, err);
        if (*predict_cmd) return cmd_predict(pred, g, out);
        return cmd_verify(tolerance_scale, g, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const LoadError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDomain;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace kic::cli

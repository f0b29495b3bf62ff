#include "kic/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kic/errors.hpp"

namespace kic {

using nlohmann::json;

std::string to_string(TimeMode mode) {
    return mode == TimeMode::DiscreteMap ? "discrete" : "continuous";
}

std::string to_string(ShapeKind kind) {
    return kind == ShapeKind::Square ? "square" : "rectangular";
}

double Diagnostics::max_residual() const {
    double worst = 0.0;
    for (double r : row_residuals) worst = std::max(worst, r);
    return worst;
}

namespace {

SpectralDecomposition decompose(const Matrix& op) {
    SpectralDecomposition s;
    if (op.rows() == op.cols()) {
        EigenDecomposition e = eig(op);
        s.kind = ShapeKind::Square;
        s.values = std::move(e.eigenvalues);
        s.right_modes = std::move(e.right_vectors);
        s.left_modes = std::move(e.left_vectors);
    } else {
        const SvdFactors f = svd(op, TruncationRule::exact());
        s.kind = ShapeKind::Rectangular;
        s.values = f.singular_values.cast<Complex>();
        s.left_modes = f.left_vectors.cast<Complex>();
        s.right_modes = f.right_vectors.cast<Complex>();
    }
    return s;
}

template <typename A, typename B>
bool same_bits(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

KoopmanModel::KoopmanModel(Matrix op, ObservableSpec input_spec, ObservableSpec output_spec,
                           TimeMode time_mode, double dt, Diagnostics diagnostics)
    : op_(std::move(op)),
      input_spec_(std::move(input_spec)),
      output_spec_(std::move(output_spec)),
      time_mode_(time_mode),
      dt_(dt),
      diagnostics_(std::move(diagnostics)) {
    if (op_.size() == 0) throw DimensionError("model operator is empty");
    if (static_cast<std::size_t>(op_.rows()) != output_spec_.size())
        throw DimensionError("operator has " + std::to_string(op_.rows()) + " rows but the output spec has " +
                             std::to_string(output_spec_.size()) + " terms");
    if (static_cast<std::size_t>(op_.cols()) != input_spec_.size())
        throw DimensionError("operator has " + std::to_string(op_.cols()) + " columns but the input spec has " +
                             std::to_string(input_spec_.size()) + " terms");
    if (output_spec_.n_x() != input_spec_.n_x() || output_spec_.n_u() != input_spec_.n_u())
        throw SpecError("input and output specs disagree on state/input dimensions");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ParameterError("model dt must be positive");
    if (!diagnostics_.row_residuals.empty() &&
        diagnostics_.row_residuals.size() != static_cast<std::size_t>(op_.rows()))
        throw DimensionError("diagnostics must hold one residual per output row");

    for (const auto& t : input_spec_.terms())
        if (t.uses_inputs()) ++n_gamma_;
    spectral_ = decompose(op_);
}

double KoopmanModel::spectral_radius() const {
    if (shape_kind() == ShapeKind::Square) return kic::spectral_radius(op_);
    try {
        const auto cols = restriction_indices(input_spec_, output_spec_);
        Matrix block(p(), p());
        for (Eigen::Index c = 0; c < p(); ++c)
            block.col(c) = op_.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(c)]));
        return kic::spectral_radius(block);
    } catch (const SpecError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

bool operator==(const KoopmanModel& a, const KoopmanModel& b) {
    return same_bits(a.op_, b.op_) && a.input_spec_ == b.input_spec_ && a.output_spec_ == b.output_spec_ &&
           a.time_mode_ == b.time_mode_ && a.dt_ == b.dt_ && a.diagnostics_ == b.diagnostics_ &&
           a.spectral_.kind == b.spectral_.kind && same_bits(a.spectral_.values, b.spectral_.values) &&
           same_bits(a.spectral_.right_modes, b.spectral_.right_modes) &&
           same_bits(a.spectral_.left_modes, b.spectral_.left_modes);
}

std::vector<double> row_residuals(const Matrix& op, const Matrix& targets, const Matrix& regressors) {
    if (op.cols() != regressors.rows() || op.rows() != targets.rows() || targets.cols() != regressors.cols())
        throw DimensionError("residual shapes are inconsistent");
    const Matrix err = targets - op * regressors;
    std::vector<double> out(static_cast<std::size_t>(targets.rows()));
    for (Eigen::Index r = 0; r < targets.rows(); ++r)
        out[static_cast<std::size_t>(r)] = err.row(r).norm() / std::max(targets.row(r).norm(), 1e-300);
    return out;
}

// ---------------------------------------------------------------------------
// Modal queries

ComplexVector eigenfunction_eval(const KoopmanModel& model, const ComplexVector& z) {
    if (z.size() != model.q())
        throw DimensionError("eigenfunction argument has length " + std::to_string(z.size()) + ", expected " +
                             std::to_string(model.q()));
    const auto& s = model.spectral();
    const ComplexMatrix& basis = s.kind == ShapeKind::Square ? s.left_modes : s.right_modes;
    // <z, b_j> = b_j^H z
    return basis.adjoint() * z;
}

ComplexVector eigenfunction_eval(const KoopmanModel& model, const Vector& z) {
    return eigenfunction_eval(model, ComplexVector(z.cast<Complex>()));
}

ComplexVector expansion_coefficients(const KoopmanModel& model, const Vector& z) {
    if (model.shape_kind() != ShapeKind::Square) throw EstimatorError("modal expansion needs a square operator");
    const auto& s = model.spectral();
    ComplexVector c = eigenfunction_eval(model, z);
    for (Eigen::Index j = 0; j < c.size(); ++j) {
        const Complex scale = s.left_modes.col(j).dot(s.right_modes.col(j));  // w_j^H v_j
        c[j] /= scale;
    }
    return c;
}

namespace {

// How each lifted input term is produced during prediction.
struct LiftPlan {
    enum class Source { Output, Rebuild };
    std::vector<Source> source;
    std::vector<std::size_t> output_row;       // Source::Output
    std::vector<std::size_t> state_output_row; // output row holding state i, per state index
    bool needs_inputs = false;
};

LiftPlan plan_lift(const KoopmanModel& model) {
    const auto& in = model.input_spec();
    const auto& out = model.output_spec();
    LiftPlan plan;
    plan.state_output_row.assign(static_cast<std::size_t>(in.n_x()), std::numeric_limits<std::size_t>::max());
    for (std::size_t r = 0; r < out.size(); ++r) {
        const auto& t = out.terms()[r];
        if (t.kind() == ObservableTerm::Kind::StateIdentity &&
            plan.state_output_row[static_cast<std::size_t>(t.index())] == std::numeric_limits<std::size_t>::max())
            plan.state_output_row[static_cast<std::size_t>(t.index())] = r;
    }

    for (const auto& t : in.terms()) {
        if (const auto row = out.find(t.label()); row && out.terms()[*row].same_function(t)) {
            plan.source.push_back(LiftPlan::Source::Output);
            plan.output_row.push_back(*row);
            continue;
        }
        for (std::size_t i = 0; i < t.state_powers().size(); ++i) {
            if (t.state_powers()[i] > 0 &&
                plan.state_output_row[i] == std::numeric_limits<std::size_t>::max())
                throw ClosureError("input term '" + t.label() + "' needs state x" + std::to_string(i + 1) +
                                   ", which is not among the model outputs");
        }
        if (t.uses_inputs()) plan.needs_inputs = true;
        plan.source.push_back(LiftPlan::Source::Rebuild);
        plan.output_row.push_back(0);
    }
    return plan;
}

}  // namespace

Matrix predict(const KoopmanModel& model, const Vector& x0, const std::optional<Matrix>& inputs,
               Eigen::Index steps) {
    if (steps < 0) throw ParameterError("steps must be nonnegative");
    if (x0.size() != model.p())
        throw DimensionError("initial state has length " + std::to_string(x0.size()) + ", model has " +
                             std::to_string(model.p()) + " outputs");
    const LiftPlan plan = plan_lift(model);
    const auto& in = model.input_spec();
    if (plan.needs_inputs && steps > 0) {
        if (!inputs) throw MissingInputError("model needs input samples to predict");
        if (inputs->rows() != in.n_u() || inputs->cols() < steps)
            throw DimensionError("input matrix must be " + std::to_string(in.n_u()) + " x " + std::to_string(steps) +
                                 " or wider");
    }

    Matrix out(model.p(), steps + 1);
    out.col(0) = x0;
    Vector lifted(model.q());
    Vector x = Vector::Zero(in.n_x());
    Vector u = Vector::Zero(in.n_u());
    for (Eigen::Index k = 0; k < steps; ++k) {
        const auto current = out.col(k);
        for (std::size_t i = 0; i < plan.state_output_row.size(); ++i)
            if (plan.state_output_row[i] != std::numeric_limits<std::size_t>::max())
                x[static_cast<Eigen::Index>(i)] = current[static_cast<Eigen::Index>(plan.state_output_row[i])];
        if (plan.needs_inputs) u = inputs->col(k);
        for (std::size_t r = 0; r < in.size(); ++r) {
            lifted[static_cast<Eigen::Index>(r)] =
                plan.source[r] == LiftPlan::Source::Output
                    ? current[static_cast<Eigen::Index>(plan.output_row[r])]
                    : in.terms()[r].evaluate(x, u);
        }
        if (model.time_mode() == TimeMode::DiscreteMap)
            out.col(k + 1) = model.op() * lifted;
        else
            out.col(k + 1) = current + model.dt() * (model.op() * lifted);
    }
    return out;
}

Matrix predict_spectral(const KoopmanModel& model, const Vector& x0, Eigen::Index steps) {
    if (model.shape_kind() != ShapeKind::Square || model.time_mode() != TimeMode::DiscreteMap)
        throw EstimatorError("modal prediction needs a square discrete-time operator");
    if (steps < 0) throw ParameterError("steps must be nonnegative");
    const auto& s = model.spectral();
    const ComplexVector c = expansion_coefficients(model, x0);
    Matrix out(model.p(), steps + 1);
    ComplexVector power = ComplexVector::Ones(c.size());
    for (Eigen::Index k = 0; k <= steps; ++k) {
        out.col(k) = (s.right_modes * power.cwiseProduct(c)).real();
        power = power.cwiseProduct(s.values);
    }
    return out;
}

std::vector<double> reconstruct_residual(const KoopmanModel& model, const SnapshotSet& ss) {
    const Matrix omega = ss.omega();
    if (omega.rows() != model.q())
        throw DimensionError("snapshot set has " + std::to_string(omega.rows()) + " regressor rows, model expects " +
                             std::to_string(model.q()));
    if (model.p() == ss.n_y()) return row_residuals(model.op(), ss.Z(), omega);
    const Matrix delta = ss.delta();
    if (delta.rows() == model.p()) return row_residuals(model.op(), delta, omega);
    throw DimensionError("snapshot targets do not match the model's " + std::to_string(model.p()) + " outputs");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

constexpr int kSchemaVersion = 1;

json term_to_json(const ObservableTerm& t) {
    switch (t.kind()) {
        case ObservableTerm::Kind::StateIdentity:
            return {{"kind", "state"}, {"index", t.index()}, {"label", t.label()}};
        case ObservableTerm::Kind::InputIdentity:
            return {{"kind", "input"}, {"index", t.index()}, {"label", t.label()}};
        case ObservableTerm::Kind::Monomial:
            break;
    }
    return {{"kind", "monomial"},
            {"state_powers", t.state_powers()},
            {"input_powers", t.input_powers()},
            {"label", t.label()}};
}

json spec_to_json(const ObservableSpec& spec) {
    json terms = json::array();
    for (const auto& t : spec.terms()) terms.push_back(term_to_json(t));
    return {{"n_x", spec.n_x()}, {"n_u", spec.n_u()}, {"terms", terms}};
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Modes as a list of vectors, one per mode.
json modes_to_json(const ComplexMatrix& m) {
    json modes = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        json mode = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) mode.push_back(complex_to_json(m(r, c)));
        modes.push_back(std::move(mode));
    }
    return modes;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    std::string unknown;
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    }
    if (!unknown.empty()) throw LoadError("unknown field(s) in " + where + ": " + unknown);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw LoadError("missing field '" + key + "' in " + where);
    return obj.at(key);
}

ObservableTerm term_from_json(const json& j) {
    reject_unknown(j, {"kind", "index", "label", "state_powers", "input_powers"}, "observable term");
    const std::string kind = require(j, "kind", "observable term").get<std::string>();
    const std::string label = require(j, "label", "observable term").get<std::string>();
    if (kind == "state") return ObservableTerm::state(require(j, "index", "observable term").get<int>(), label);
    if (kind == "input") return ObservableTerm::input(require(j, "index", "observable term").get<int>(), label);
    if (kind == "monomial")
        return ObservableTerm::monomial(require(j, "state_powers", "observable term").get<std::vector<int>>(),
                                        require(j, "input_powers", "observable term").get<std::vector<int>>(), label);
    throw LoadError("unknown observable kind '" + kind + "'");
}

ObservableSpec spec_from_json(const json& j, const std::string& where) {
    reject_unknown(j, {"n_x", "n_u", "terms"}, where);
    std::vector<ObservableTerm> terms;
    for (const auto& t : require(j, "terms", where)) terms.push_back(term_from_json(t));
    return ObservableSpec(std::move(terms), require(j, "n_x", where).get<int>(), require(j, "n_u", where).get<int>());
}

Matrix matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw LoadError("operator must have " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw LoadError("operator row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

std::string model_to_json(const KoopmanModel& model) {
    const auto& s = model.spectral();
    json spectral;
    if (s.kind == ShapeKind::Square) {
        json values = json::array();
        for (Eigen::Index j = 0; j < s.values.size(); ++j) values.push_back(complex_to_json(s.values[j]));
        spectral = {{"kind", "eigen"},
                    {"eigenvalues", values},
                    {"right_modes", modes_to_json(s.right_modes)},
                    {"left_modes", modes_to_json(s.left_modes)}};
    } else {
        json values = json::array();
        for (Eigen::Index j = 0; j < s.values.size(); ++j) values.push_back(s.values[j].real());
        spectral = {{"kind", "singular"},
                    {"singular_values", values},
                    {"right_modes", modes_to_json(s.right_modes)},
                    {"left_modes", modes_to_json(s.left_modes)}};
    }

    const auto& d = model.diagnostics();
    json doc = {
        {"schema_version", kSchemaVersion},
        {"shape_kind", to_string(model.shape_kind())},
        {"operator", matrix_to_json(model.op())},
        {"dims", {{"p", model.p()}, {"q", model.q()}, {"n_y", model.n_y()}, {"n_gamma", model.n_gamma()}}},
        {"input_spec", spec_to_json(model.input_spec())},
        {"output_spec", spec_to_json(model.output_spec())},
        {"time_mode", to_string(model.time_mode())},
        {"dt", model.dt()},
        {"diagnostics",
         {{"row_residuals", d.row_residuals}, {"rank_deficient", d.rank_deficient}, {"rank", d.rank}}},
        {"spectral", spectral},
    };
    return doc.dump(2) + "\n";
}

KoopmanModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw LoadError("model file must hold a JSON object");

    try {
        const int version = require(doc, "schema_version", "model").get<int>();
        if (version != kSchemaVersion)
            throw LoadError("schema_version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kSchemaVersion) + ")");
        reject_unknown(doc,
                       {"schema_version", "shape_kind", "operator", "dims", "input_spec", "output_spec", "time_mode",
                        "dt", "diagnostics", "spectral"},
                       "model");

        const json& dims = require(doc, "dims", "model");
        reject_unknown(dims, {"p", "q", "n_y", "n_gamma"}, "dims");
        const auto p = require(dims, "p", "dims").get<Eigen::Index>();
        const auto q = require(dims, "q", "dims").get<Eigen::Index>();
        if (p <= 0 || q <= 0) throw LoadError("dims p and q must be positive");

        Matrix op = matrix_from_json(require(doc, "operator", "model"), p, q);
        ObservableSpec input_spec = spec_from_json(require(doc, "input_spec", "model"), "input_spec");
        ObservableSpec output_spec = spec_from_json(require(doc, "output_spec", "model"), "output_spec");

        const std::string mode_text = require(doc, "time_mode", "model").get<std::string>();
        TimeMode mode;
        if (mode_text == "discrete")
            mode = TimeMode::DiscreteMap;
        else if (mode_text == "continuous")
            mode = TimeMode::ContinuousDerivative;
        else
            throw LoadError("unknown time_mode '" + mode_text + "'");
        const double dt = require(doc, "dt", "model").get<double>();

        Diagnostics diag;
        if (doc.contains("diagnostics")) {
            const json& d = doc.at("diagnostics");
            reject_unknown(d, {"row_residuals", "rank_deficient", "rank"}, "diagnostics");
            if (d.contains("row_residuals")) diag.row_residuals = d.at("row_residuals").get<std::vector<double>>();
            if (d.contains("rank_deficient")) diag.rank_deficient = d.at("rank_deficient").get<bool>();
            if (d.contains("rank")) diag.rank = d.at("rank").get<std::size_t>();
        }
        if (doc.contains("spectral") && !doc.at("spectral").is_object())
            throw LoadError("spectral must be an object");

        KoopmanModel model(std::move(op), std::move(input_spec), std::move(output_spec), mode, dt, std::move(diag));

        if (doc.contains("shape_kind") && doc.at("shape_kind").get<std::string>() != to_string(model.shape_kind()))
            throw LoadError("shape_kind does not match the operator dimensions");
        if (dims.contains("n_y") && dims.at("n_y").get<Eigen::Index>() != model.n_y())
            throw LoadError("dims.n_y does not match the input spec");
        if (dims.contains("n_gamma") && dims.at("n_gamma").get<Eigen::Index>() != model.n_gamma())
            throw LoadError("dims.n_gamma does not match the input spec");
        return model;
    } catch (const json::exception& e) {
        throw LoadError(std::string("schema violation: ") + e.what());
    } catch (const LoadError&) {
        throw;
    } catch (const Error& e) {
        throw LoadError(std::string("schema violation: ") + e.what());
    }
}

void save_model(const KoopmanModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << model_to_json(model);
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

KoopmanModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str());
}

}  // namespace kic
